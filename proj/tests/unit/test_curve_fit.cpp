#include "tetris/analysis/curve.hpp"
#include "tetris/analysis/linear_fit.hpp"
#include "tetris/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace tetris;

namespace {

Curve sampled(double lo, double hi, int n, double (*f)(double))
{
    Curve c;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * i / (n - 1);
        c.x.push_back(x);
        c.y.push_back(f(x));
    }
    return c;
}

} // namespace

TEST(Transition, LinearCurveTiesResolveToGridMidpoint)
{
    const Curve c = sampled(0.0, 2.0, 21, [](double x) { return 3.0 * x; });
    const TransitionEstimate t = transition_location(c);
    EXPECT_NEAR(t.location, 1.0, 1e-12);
    EXPECT_EQ(t.first, 0u);
    EXPECT_EQ(t.last, 20u);
    for (double d : t.derivative) {
        EXPECT_NEAR(d, 3.0, 1e-12);
    }
}

TEST(Transition, TanhStepLocatedWithinOneGridStep)
{
    const Curve c = sampled(0.0, 2.0, 201, [](double x) { return std::tanh(5.0 * (x - 0.7)); });
    EXPECT_NEAR(transition_location(c).location, 0.70, 0.01);
}

TEST(Transition, InvariantUnderShiftEquivariantUnderAffineLabels)
{
    Curve c = sampled(0.1, 2.1, 40, [](double x) { return 1.0 / (1.0 + std::exp(-8.0 * (x - 1.13))); });
    const double base = transition_location(c).location;
    Curve shifted = c;
    for (double& y : shifted.y) {
        y += 17.0;
    }
    EXPECT_DOUBLE_EQ(transition_location(shifted).location, base);
    Curve scaled = c;
    for (double& x : scaled.x) {
        x = 3.0 * x - 2.0;
    }
    EXPECT_NEAR(transition_location(scaled).location, 3.0 * base - 2.0, 1e-12);
}

TEST(Transition, NonUniformGridAndErrors)
{
    Curve c{{0.0, 0.1, 0.3, 0.35, 0.8, 1.0}, {0, 0.01, 0.05, 0.6, 0.95, 1.0}, {}};
    const TransitionEstimate t = transition_location(c);
    EXPECT_GT(t.location, 0.2);
    EXPECT_LT(t.location, 0.5);
    EXPECT_THROW(transition_location(Curve{{0, 1, 2, 3}, {0, 1, 2, 3}, {}}), InvalidArgument);
    EXPECT_THROW(transition_location(Curve{{0, 1, 1, 3, 4}, {0, 1, 2, 3, 4}, {}}), InvalidArgument);
}

TEST(Curve, FromSamplesAndCsv)
{
    const std::vector<double> labels{1.0, 0.5, 1.0, 0.5};
    const std::vector<double> values{2.0, 1.0, 4.0, 1.0};
    const Curve c = curve_from_samples(labels, values);
    EXPECT_EQ(c.x, (std::vector<double>{0.5, 1.0}));
    EXPECT_EQ(c.y, (std::vector<double>{1.0, 3.0}));
    EXPECT_EQ(c.y_err[0], 0.0);
    EXPECT_NEAR(c.y_err[1], 1.0, 1e-12);  // sd sqrt(2) over sqrt(2) samples
    std::ostringstream out;
    write_curve_csv(c, out, "m");
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "x,m,m_err");
}

TEST(LeastSquares, ExactLinearDataHasUnitR2)
{
    std::vector<double> x;
    std::vector<double> y;
    Rng rng(1);
    for (int i = 0; i < 30; ++i) {
        const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
        x.push_back(a);
        x.push_back(b);
        y.push_back(0.5 * a - 2.0 * b + 0.1);
    }
    const LeastSquares f = least_squares(x, 30, 2, y);
    EXPECT_NEAR(f.coefficients[0], 0.5, 1e-12);
    EXPECT_NEAR(f.coefficients[1], -2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 0.1, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-10);
    EXPECT_FALSE(f.degenerate);
}

TEST(LeastSquares, RankDeficientGivesMinimumNorm)
{
    std::vector<double> x;
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) {
        x.push_back(i);
        x.push_back(i);  // duplicate column
        y.push_back(2.0 * i + 1.0);
    }
    const LeastSquares f = least_squares(x, 10, 2, y);
    EXPECT_TRUE(f.degenerate);
    EXPECT_NEAR(f.coefficients[0], 1.0, 1e-9);
    EXPECT_NEAR(f.coefficients[1], 1.0, 1e-9);
    EXPECT_NEAR(f.r2, 1.0, 1e-10);
}

namespace {

// 40 labels x 20 samples of a chain whose nearest-neighbour correlation
// varies with the label.
SpinDataset correlated_chain()
{
    SpinDataset d(Geometry{1, 1, 10, false}, Provenance{});
    Rng rng(2);
    std::vector<std::int8_t> s(10);
    for (int l = 0; l < 40; ++l) {
        const double p_same = 0.5 + 0.45 * l / 39.0;
        for (int i = 0; i < 20; ++i) {
            s[0] = rng.bernoulli(0.5) ? 1 : -1;
            for (int k = 1; k < 10; ++k) {
                s[static_cast<std::size_t>(k)] = rng.bernoulli(p_same) ? s[static_cast<std::size_t>(k) - 1]
                                                                       : static_cast<std::int8_t>(-s[static_cast<std::size_t>(k) - 1]);
            }
            d.add(s, 0.05 * l);
        }
    }
    return d;
}

} // namespace

TEST(BranchLinearFit, RecoversConstructedActivation)
{
    const SpinDataset d = correlated_chain();
    const CorrelatorTable t = correlator_table(d, kernel_features(KernelSpec{2, 1, 1}, d.geometry()));
    ASSERT_EQ(t.features.size(), 2u);
    std::size_t nn = t.features[0].mask.cells.size() == 2 ? 0 : 1;
    std::vector<double> a(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        a[i] = 0.5 * t.value(i, nn) + 0.1;
    }
    const LinearFit f = branch_linear_fit(a, t);
    EXPECT_NEAR(f.coefficients[nn], 0.5, 1e-10);
    EXPECT_NEAR(f.coefficients[1 - nn], 0.0, 1e-10);
    EXPECT_NEAR(f.intercept, 0.1, 1e-10);
    EXPECT_NEAR(f.r2, 1.0, 1e-10);
    EXPECT_EQ(f.leading_feature(), nn);
    EXPECT_EQ(f.activation.size(), 40u);
}

TEST(BranchLinearFit, LargeFeatureSetsAreSelectedGreedily)
{
    const SpinDataset d = correlated_chain();
    const CorrelatorTable t = correlator_table(d, kernel_features(KernelSpec{6, 1, 1}, d.geometry()));
    ASSERT_GT(2 * t.features.size(), t.groups());
    std::size_t nn = 0;
    while (t.features[nn].mask.cells.size() != 2 || t.features[nn].mask.cells[1].row != 1) {
        ++nn;
    }
    std::vector<double> a(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        a[i] = -1.5 * t.value(i, nn) + 0.3;
    }
    const LinearFit f = branch_linear_fit(a, t);
    EXPECT_LE(f.selected.size(), 10u);
    EXPECT_EQ(f.selected.front(), nn);
    EXPECT_NEAR(f.r2, 1.0, 1e-10);
    EXPECT_NEAR(f.coefficients[nn], -1.5, 1e-8);
}
