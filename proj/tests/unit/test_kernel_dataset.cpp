#include "tetris/dataset.hpp"
#include "tetris/error.hpp"
#include "tetris/kernel.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace tetris;

TEST(Kernel, ParsesEveryAcceptedSpelling)
{
    const KernelSpec want{2, 1, 3};
    EXPECT_EQ(KernelSpec::parse("[(2, 1), 3]"), want);
    EXPECT_EQ(KernelSpec::parse("(2,1),3"), want);
    EXPECT_EQ(KernelSpec::parse("2x1d3"), want);
    EXPECT_EQ(KernelSpec::parse("2x1"), (KernelSpec{2, 1, 1}));
    EXPECT_EQ(want.label(), "[(2, 1), 3]");
    EXPECT_EQ(KernelSpec::parse(want.label()), want);
}

TEST(Kernel, RejectsMalformed)
{
    EXPECT_THROW(KernelSpec::parse("banana"), InvalidArgument);
    EXPECT_THROW(KernelSpec::parse("[(0, 1), 1]"), InvalidArgument);
    EXPECT_THROW(KernelSpec::parse("[(2, 1), 0]"), InvalidArgument);
}

TEST(Kernel, FootprintOnChainAndLattice)
{
    const Geometry chain{1, 1, 12, false};
    const Footprint f = footprint(KernelSpec{3, 1, 2}, chain);
    EXPECT_EQ(f.rows, 1);
    EXPECT_EQ(f.cols, 3);
    EXPECT_EQ(f.span_cols(), 5);
    EXPECT_THROW(footprint(KernelSpec{2, 2, 1}, chain), InvalidArgument);

    const Geometry lattice{2, 8, 8, true};
    const Footprint g = footprint(KernelSpec{3, 2, 1}, lattice);
    EXPECT_EQ(g.rows, 3);
    EXPECT_EQ(g.cols, 2);
    EXPECT_TRUE(fits(KernelSpec{3, 3, 1}, lattice));
    EXPECT_FALSE(fits(KernelSpec{5, 1, 3}, chain));
}

namespace {

SpinDataset small_dataset()
{
    SpinDataset d(Geometry{1, 1, 4, false}, Provenance{"tfim", "z", 9, {0.5, 1.0}});
    d.add(std::vector<std::int8_t>{1, -1, 1, 1}, 0.5);
    d.add(std::vector<std::int8_t>{-1, -1, 1, -1}, 1.0);
    d.add(std::vector<std::int8_t>{1, 1, 1, 1}, 1.0);
    return d;
}

} // namespace

TEST(Dataset, RoundTripIsExact)
{
    const SpinDataset d = small_dataset();
    std::stringstream buf;
    write_dataset(d, buf);
    const SpinDataset back = read_dataset(buf);
    EXPECT_TRUE(back == d);
    EXPECT_EQ(back.provenance().seed, 9u);
    EXPECT_EQ(back.provenance().grid, (std::vector<double>{0.5, 1.0}));
}

TEST(Dataset, RejectsBadMagicAndTruncation)
{
    std::stringstream bad("NOPE1xxxxxxxx");
    EXPECT_THROW(read_dataset(bad), IoError);

    std::stringstream buf;
    write_dataset(small_dataset(), buf);
    std::string s = buf.str();
    std::stringstream cut(s.substr(0, s.size() - 3));
    EXPECT_THROW(read_dataset(cut), IoError);
}

TEST(Dataset, RejectsNonSpinValuesAndWrongSizes)
{
    SpinDataset d(Geometry{1, 1, 3, false}, Provenance{});
    EXPECT_THROW(d.add(std::vector<std::int8_t>{1, 0, 1}, 0.1), InvalidArgument);
    EXPECT_THROW(d.add(std::vector<std::int8_t>{1, 1}, 0.1), InvalidArgument);
}

TEST(Dataset, SubsetAndDistinctLabels)
{
    const SpinDataset d = small_dataset();
    const std::vector<std::size_t> idx{2, 0};
    const SpinDataset s = d.subset(idx);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.label(0), 1.0);
    EXPECT_EQ(s.snapshot(1).at(0, 0, 1), -1);
    EXPECT_EQ(d.distinct_labels(), (std::vector<double>{0.5, 1.0}));
}
