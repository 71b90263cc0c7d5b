#include "tetris/analysis/distill.hpp"
#include "tetris/analysis/report.hpp"
#include "tetris/analysis/svg.hpp"
#include "tetris/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tetris;

namespace {

std::string read_all(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("tetris_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

TetrisConfig one_branch()
{
    TetrisConfig c;
    c.kernels = parse_kernel_list({"[(1,1),1]", "[(2,1),1]"});
    c.filters = 2;
    c.task_widths = {2, 6, 1};
    c.seed = 5;
    return c;
}

SpinDataset magnetized(int labels, int per_label)
{
    SpinDataset d(Geometry{1, 1, 8, false}, Provenance{});
    Rng rng(1);
    std::vector<std::int8_t> s(8);
    for (int l = 0; l < labels; ++l) {
        const double label = labels > 1 ? static_cast<double>(l) / (labels - 1) : 0.5;
        for (int i = 0; i < per_label; ++i) {
            for (auto& x : s) {
                x = rng.bernoulli(0.5 + 0.45 * label) ? 1 : -1;
            }
            d.add(s, label);
        }
    }
    return d;
}

} // namespace

TEST(Distill, ConstantLabelDatasetGivesConstantFormula)
{
    const SpinDataset d = magnetized(1, 30);
    const TetrisModel m = TetrisModel::build(one_branch(), d.geometry());
    const Distillation r = distill_network(m, d);
    EXPECT_TRUE(r.output_vs_correlators.expression.is_constant());
    EXPECT_TRUE(r.output_vs_activations.expression.is_constant());
}

TEST(Distill, NoActiveBranchIsAnError)
{
    const SpinDataset d = magnetized(20, 5);
    TetrisModel m = TetrisModel::build(one_branch(), d.geometry());
    for (auto& b : m.branches()) {
        b.weight.fill(0.0);
        b.bias.fill(0.0);
    }
    EXPECT_THROW(distill_network(m, d), InvalidArgument);
}

TEST(Distill, UntrainedModelProducesFormulasAndHeldOutScores)
{
    const SpinDataset d = magnetized(25, 20);
    const TetrisModel m = TetrisModel::build(one_branch(), d.geometry());
    DistillOptions o;
    o.sr.generations = 300;
    const Distillation r = distill_network(m, d, o);
    EXPECT_EQ(r.heldout.size(), 5u);
    EXPECT_FALSE(r.branch_fits.empty());
    EXPECT_FALSE(r.output_vs_correlators.text.empty());
    EXPECT_EQ(r.output_vs_correlators.values.size(), 25u);
    // The output is a smooth function of the one- and two-body correlators.
    EXPECT_GT(r.output_vs_correlators.r2_network_heldout, 0.9);
}

TEST(Report, EmptyAnalysisWritesHeaderOnlyFiles)
{
    const auto dir = scratch("empty");
    write_report(AnalysisReport{}, dir);
    EXPECT_EQ(read_all(dir / "curves.csv"), "label,output,output_err,d_output\n");
    EXPECT_EQ(read_all(dir / "activations.csv"), "epoch\n");
    EXPECT_EQ(read_all(dir / "linear_fits.csv"), "branch,kernel,term,coefficient,r2\n");
    EXPECT_EQ(read_all(dir / "formulas.txt"), "");
    EXPECT_NE(read_all(dir / "summary.json").find("\"warnings\": []"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(dir / "output.svg"));
}

TEST(Report, FullAnalysisEmitsBothArgmaxesAndTheirShift)
{
    const SpinDataset d = magnetized(25, 20);
    const TetrisModel m = TetrisModel::build(one_branch(), d.geometry());
    AnalysisOptions o;
    o.distill.sr.generations = 200;
    const AnalysisReport rep = analyze(m, d, o);
    ASSERT_TRUE(rep.output_transition.has_value());
    ASSERT_FALSE(rep.branch_curves.empty());
    EXPECT_TRUE(std::isfinite(rep.activation_argmax()));
    EXPECT_TRUE(std::isfinite(rep.formula_argmax()));
    EXPECT_DOUBLE_EQ(rep.argmax_shift(), rep.formula_argmax() - rep.activation_argmax());
    const auto dir = scratch("full");
    write_report(rep, dir);
    const std::string summary = read_all(dir / "summary.json");
    EXPECT_NE(summary.find("\"activation_argmax\""), std::string::npos);
    EXPECT_NE(summary.find("\"formula_argmax\""), std::string::npos);
    EXPECT_NE(summary.find("\"argmax_shift\""), std::string::npos);
    const std::string formulas = read_all(dir / "formulas.txt");
    EXPECT_NE(formulas.find("output[correlators] R2="), std::string::npos);
    const std::string curves = read_all(dir / "curves.csv");
    EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 26);
}

TEST(Report, SilentModelWarnsAboutMissingDominantBranch)
{
    const SpinDataset d = magnetized(10, 5);
    TetrisModel m = TetrisModel::build(one_branch(), d.geometry());
    for (auto& b : m.branches()) {
        b.weight.fill(0.0);
        b.bias.fill(0.0);
    }
    const AnalysisReport rep = analyze(m, d);
    ASSERT_FALSE(rep.warnings.empty());
    EXPECT_NE(std::find(rep.warnings.begin(), rep.warnings.end(), "no dominant branch"), rep.warnings.end());
    EXPECT_FALSE(rep.distillation.has_value());
}

TEST(Svg, StandaloneDocument)
{
    const std::string s = svg_line_plot("t<1>", "x", "y", {{"a", {0, 1, 2}, {1, 4, 9}}});
    EXPECT_EQ(s.rfind("<svg", 0), 0u);
    EXPECT_NE(s.find("t&lt;1&gt;"), std::string::npos);
    EXPECT_NE(s.find("</svg>"), std::string::npos);
}
