#include "tetris/error.hpp"
#include "tetris/spin_models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace tetris;

namespace {

// Independent plaquette energy: h(i,j) h(i+1,j) v(i,j) v(i,j+1).
double oracle_energy(const std::vector<std::int8_t>& links, int l)
{
    auto h = [&](int i, int j) { return links[static_cast<std::size_t>(((i + l) % l) * l + (j + l) % l)]; };
    auto v = [&](int i, int j) { return links[static_cast<std::size_t>(l * l + ((i + l) % l) * l + (j + l) % l)]; };
    double e = 0.0;
    for (int i = 0; i < l; ++i) {
        for (int j = 0; j < l; ++j) {
            e -= h(i, j) * h(i + 1, j) * v(i, j) * v(i, j + 1);
        }
    }
    return e;
}

std::vector<std::int8_t> decode(unsigned code, int bits)
{
    std::vector<std::int8_t> s(static_cast<std::size_t>(bits));
    for (int b = 0; b < bits; ++b) {
        s[static_cast<std::size_t>(b)] = ((code >> b) & 1u) ? -1 : 1;
    }
    return s;
}

double boltzmann_tv(double beta, int samples, std::uint64_t seed)
{
    const int l = 2;
    const int bits = 2 * l * l;
    std::vector<double> exact(1u << bits);
    double z = 0.0;
    for (unsigned c = 0; c < exact.size(); ++c) {
        exact[c] = std::exp(-beta * oracle_energy(decode(c, bits), l));
        z += exact[c];
    }
    IgtChain chain(l, 1.0, beta, Rng(seed));
    chain.sweeps(200);
    std::vector<double> hist(exact.size(), 0.0);
    for (int s = 0; s < samples; ++s) {
        chain.sweeps(10);
        unsigned code = 0;
        const auto links = chain.links();
        for (int b = 0; b < bits; ++b) {
            code |= (links[static_cast<std::size_t>(b)] == -1 ? 1u : 0u) << b;
        }
        hist[code] += 1.0 / samples;
    }
    double tv = 0.0;
    for (std::size_t c = 0; c < exact.size(); ++c) {
        tv += 0.5 * std::abs(hist[c] - exact[c] / z);
    }
    return tv;
}

} // namespace

TEST(IgtEnergy, MatchesOracleOnRandomConfigurations)
{
    Rng rng(1);
    for (int l : {2, 3, 5}) {
        const Geometry g = igt_geometry(l);
        for (int t = 0; t < 50; ++t) {
            std::vector<std::int8_t> links(static_cast<std::size_t>(2 * l * l));
            for (auto& s : links) {
                s = rng.bernoulli(0.5) ? 1 : -1;
            }
            EXPECT_DOUBLE_EQ(igt_plaquette_energy(links, g), oracle_energy(links, l));
        }
    }
}

TEST(IgtEnergy, GaugeFlipLeavesEnergyUnchanged)
{
    // Flipping the four links touching a vertex flips two links in every
    // adjacent plaquette.
    const int l = 4;
    Rng rng(2);
    std::vector<std::int8_t> links(2 * l * l);
    for (auto& s : links) {
        s = rng.bernoulli(0.5) ? 1 : -1;
    }
    const double before = oracle_energy(links, l);
    const int i = 1, j = 2;
    auto hidx = [&](int a, int b) { return static_cast<std::size_t>(((a + l) % l) * l + (b + l) % l); };
    auto vidx = [&](int a, int b) { return static_cast<std::size_t>(l * l + ((a + l) % l) * l + (b + l) % l); };
    for (auto k : {hidx(i, j), hidx(i, j - 1), vidx(i, j), vidx(i - 1, j)}) {
        links[k] = static_cast<std::int8_t>(-links[k]);
    }
    // With the plaquette convention above, vertex (i,j) touches h(i,j), h(i,j-1), v(i,j), v(i-1,j).
    EXPECT_DOUBLE_EQ(igt_plaquette_energy(links, igt_geometry(l)), before);
}

TEST(IgtMetropolis, MatchesExactBoltzmannOnTwoByTwo)
{
    for (double beta : {0.2, 0.5, 1.0}) {
        EXPECT_LT(boltzmann_tv(beta, 100000, 7), 0.02) << "beta " << beta;
    }
}

TEST(IgtMetropolis, ZeroBetaIsUniformOverLinks)
{
    IgtChain chain(4, 1.0, 0.0, Rng(3));
    double mean = 0.0;
    const int samples = 2000;
    for (int s = 0; s < samples; ++s) {
        chain.sweeps(2);
        for (auto v : chain.links()) {
            mean += v;
        }
    }
    EXPECT_NEAR(mean / (samples * 32.0), 0.0, 0.02);
}

TEST(IgtDataset, ShapeParityAndDeterminism)
{
    IgtParams p;
    p.size = 4;
    p.sweeps = 50;
    p.samples_per_beta = 20;
    p.beta_grid = {0.1, 0.8, 1.5};
    p.seed = 4;
    const SpinDataset d = build_igt_dataset(p);
    ASSERT_EQ(d.size(), 60u);
    EXPECT_EQ(d.geometry().channels, 2);
    EXPECT_TRUE(d.geometry().periodic);
    for (std::int8_t s : d.raw_spins()) {
        ASSERT_EQ(s * s, 1);
    }
    EXPECT_TRUE(build_igt_dataset(p) == d);
}

TEST(IgtDataset, PlaquetteRisesWithBeta)
{
    IgtParams p;
    p.size = 6;
    p.sweeps = 200;
    p.samples_per_beta = 100;
    p.beta_grid = {0.1, 1.0, 2.0};
    const SpinDataset d = build_igt_dataset(p);
    std::map<double, double> mean;
    for (std::size_t i = 0; i < d.size(); ++i) {
        mean[d.label(i)] += -igt_plaquette_energy(d.snapshot(i).spins(), d.geometry()) / (36.0 * 100);
    }
    EXPECT_NEAR(mean[0.1], std::tanh(0.1), 0.03);
    EXPECT_NEAR(mean[1.0], std::tanh(1.0), 0.03);
    EXPECT_NEAR(mean[2.0], std::tanh(2.0), 0.03);
}

TEST(IgtDataset, RejectsBadParameters)
{
    IgtParams p;
    p.size = 1;
    p.beta_grid = {0.5};
    EXPECT_THROW(build_igt_dataset(p), InvalidArgument);
    p.size = 4;
    p.beta_grid = {0.5, 0.5};
    EXPECT_THROW(build_igt_dataset(p), InvalidArgument);
}
