#include "tetris/nn/graph.hpp"
#include "tetris/rng.hpp"
#include "tetris/tetris_model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

using namespace tetris;
using namespace tetris::nn;

namespace {

constexpr int kCases = 50;
constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-4;

using Build = std::function<Graph::Id(Graph&, const std::vector<Graph::Id>&)>;

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0)
{
    Tensor t(std::move(shape));
    for (double& v : t.values()) {
        v = scale * rng.uniform(-1.0, 1.0);
    }
    return t;
}

double evaluate(std::vector<Tensor>& params, const Build& build)
{
    Graph g(false);
    std::vector<Graph::Id> ids;
    for (auto& p : params) {
        ids.push_back(g.parameter(p, "p"));
    }
    return g.value(build(g, ids))[0];
}

// Worst relative error between the tape gradient and central differences
// over up to 12 random entries of every parameter.
double gradient_error(std::vector<Tensor>& params, const Build& build, Rng& rng)
{
    for (auto& p : params) {
        p.zero_grad();
    }
    {
        Graph g;
        std::vector<Graph::Id> ids;
        for (auto& p : params) {
            ids.push_back(g.parameter(p, "p"));
        }
        g.backward(build(g, ids));
    }
    double worst = 0.0;
    for (auto& p : params) {
        const std::vector<double> analytic(p.grad().begin(), p.grad().end());
        const std::size_t picks = std::min<std::size_t>(12, p.size());
        for (std::size_t t = 0; t < picks; ++t) {
            const std::size_t i = p.size() <= 12 ? t : rng.below(p.size());
            const double keep = p[i];
            p[i] = keep + kStep;
            const double up = evaluate(params, build);
            p[i] = keep - kStep;
            const double down = evaluate(params, build);
            p[i] = keep;
            const double numeric = (up - down) / (2.0 * kStep);
            const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
            worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
        }
    }
    return worst;
}

int pick(Rng& rng, int lo, int hi)
{
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Reduces any [B, ...] node to a scalar through ops that are checked on
// their own below.
Graph::Id to_scalar(Graph& g, Graph::Id x, int batch, Rng& rng)
{
    const Graph::Id pooled = g.global_average(x, "pool");
    return g.mse(pooled, g.constant(random_tensor({batch}, rng), "target"));
}

} // namespace

TEST(GradientCheck, Conv2d)
{
    Rng rng(1);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 3), ch = pick(rng, 1, 2), f = pick(rng, 1, 3);
        const int kr = pick(rng, 1, 3), kc = pick(rng, 1, 2), dil = pick(rng, 1, 2);
        const int h = dil * (kr - 1) + pick(rng, 1, 3), w = dil * (kc - 1) + pick(rng, 1, 3);
        std::vector<Tensor> p{random_tensor({b, ch, h, w}, rng), random_tensor({f, ch, kr, kc}, rng),
                              random_tensor({f}, rng)};
        Rng target_rng(c);
        const Build build = [&, dil, b](Graph& g, const std::vector<Graph::Id>& id) {
            Rng t = target_rng;
            return to_scalar(g, g.conv2d(id[0], id[1], id[2], dil, "conv"), b, t);
        };
        EXPECT_LT(gradient_error(p, build, rng), kTolerance) << "case " << c;
    }
}

TEST(GradientCheck, TanhActivation)
{
    Rng rng(2);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 4), n = pick(rng, 1, 6);
        std::vector<Tensor> p{random_tensor({b, n}, rng, 2.0)};
        Rng target_rng(c);
        const Build build = [&, b](Graph& g, const std::vector<Graph::Id>& id) {
            Rng t = target_rng;
            return to_scalar(g, g.activation(id[0], Activation::tanh, "tanh"), b, t);
        };
        EXPECT_LT(gradient_error(p, build, rng), kTolerance) << "case " << c;
    }
}

TEST(GradientCheck, FusedBranch)
{
    Rng rng(3);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 3), ch = pick(rng, 1, 2), f = pick(rng, 1, 4);
        const int kr = pick(rng, 1, 3), kc = pick(rng, 1, 3), dil = pick(rng, 1, 3);
        const int h = dil * (kr - 1) + pick(rng, 1, 3), w = dil * (kc - 1) + pick(rng, 1, 3);
        const Activation act = c % 2 == 0 ? Activation::tanh : Activation::identity;
        std::vector<Tensor> p{random_tensor({b, ch, h, w}, rng), random_tensor({f, ch, kr, kc}, rng),
                              random_tensor({f}, rng)};
        const Tensor target = random_tensor({b}, rng);
        const Build build = [&, dil, act](Graph& g, const std::vector<Graph::Id>& id) {
            return g.mse(g.branch(id[0], id[1], id[2], dil, act, "branch"), g.constant(target));
        };
        EXPECT_LT(gradient_error(p, build, rng), kTolerance) << "case " << c;
    }
}

TEST(GradientCheck, FusedBranchMatchesUnfusedOps)
{
    Rng rng(4);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 3), ch = pick(rng, 1, 2), f = pick(rng, 1, 3), dil = pick(rng, 1, 2);
        const int kr = pick(rng, 1, 2), kc = pick(rng, 1, 2);
        const int h = dil * (kr - 1) + pick(rng, 1, 4), w = dil * (kc - 1) + pick(rng, 1, 4);
        Tensor x = random_tensor({b, ch, h, w}, rng), wt = random_tensor({f, ch, kr, kc}, rng), bias = random_tensor({f}, rng);
        Graph g(false);
        const auto ix = g.constant(x), iw = g.constant(wt), ib = g.constant(bias);
        const auto fused = g.branch(ix, iw, ib, dil, Activation::tanh, "fused");
        const auto plain = g.global_average(g.activation(g.conv2d(ix, iw, ib, dil, "c"), Activation::tanh, "t"), "m");
        for (int i = 0; i < b; ++i) {
            EXPECT_NEAR(g.value(fused)[static_cast<std::size_t>(i)], g.value(plain)[static_cast<std::size_t>(i)], 1e-13);
        }
    }
}

TEST(GradientCheck, GlobalAverage)
{
    Rng rng(5);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 4), f = pick(rng, 1, 3), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
        std::vector<Tensor> p{random_tensor({b, f, h, w}, rng)};
        const Tensor target = random_tensor({b}, rng);
        const Build build = [&](Graph& g, const std::vector<Graph::Id>& id) {
            return g.mse(g.global_average(id[0], "pool"), g.constant(target));
        };
        EXPECT_LT(gradient_error(p, build, rng), kTolerance) << "case " << c;
    }
}

TEST(GradientCheck, Dense)
{
    Rng rng(6);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 4), in = pick(rng, 1, 6), out = pick(rng, 1, 5);
        std::vector<Tensor> p{random_tensor({b, in}, rng), random_tensor({out, in}, rng), random_tensor({out}, rng)};
        Rng target_rng(c);
        const Build build = [&, b](Graph& g, const std::vector<Graph::Id>& id) {
            Rng t = target_rng;
            return to_scalar(g, g.dense(id[0], id[1], id[2], "dense"), b, t);
        };
        EXPECT_LT(gradient_error(p, build, rng), kTolerance) << "case " << c;
    }
}

TEST(GradientCheck, ConcatColumns)
{
    Rng rng(7);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 4), k = pick(rng, 1, 4);
        std::vector<Tensor> p;
        for (int i = 0; i < k; ++i) {
            p.push_back(random_tensor({b}, rng));
        }
        p.push_back(random_tensor({2, k}, rng));
        p.push_back(random_tensor({2}, rng));
        Rng target_rng(c);
        const Build build = [&, k, b](Graph& g, const std::vector<Graph::Id>& id) {
            std::vector<Graph::Id> cols(id.begin(), id.begin() + k);
            const auto cat = g.concat_columns(cols, "cat");
            Rng t = target_rng;
            return to_scalar(g, g.dense(cat, id[static_cast<std::size_t>(k)], id[static_cast<std::size_t>(k) + 1], "d"), b, t);
        };
        EXPECT_LT(gradient_error(p, build, rng), kTolerance) << "case " << c;
    }
}

TEST(GradientCheck, MeanSquaredError)
{
    Rng rng(8);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 6);
        std::vector<Tensor> p{random_tensor(c % 2 ? Shape{b, 1} : Shape{b}, rng)};
        const Tensor target = random_tensor({b}, rng);
        const Build build = [&](Graph& g, const std::vector<Graph::Id>& id) { return g.mse(id[0], g.constant(target)); };
        EXPECT_LT(gradient_error(p, build, rng), kTolerance) << "case " << c;
    }
}

TEST(GradientCheck, L1PenaltyAndAdd)
{
    Rng rng(9);
    for (int c = 0; c < kCases; ++c) {
        const int b = pick(rng, 1, 4), k = pick(rng, 1, 5);
        Tensor a = random_tensor({b, k}, rng);
        for (double& v : a.values()) {
            v += v >= 0 ? 0.05 : -0.05;  // keep away from the kink
        }
        std::vector<double> lambda(static_cast<std::size_t>(k));
        for (double& l : lambda) {
            l = rng.uniform(0.0, 1.0);
        }
        std::vector<Tensor> p{a, random_tensor({b}, rng)};
        const Tensor target = random_tensor({b}, rng);
        const Build build = [&](Graph& g, const std::vector<Graph::Id>& id) {
            return g.add(g.l1_penalty(id[0], lambda), g.mse(id[1], g.constant(target)), "total");
        };
        EXPECT_LT(gradient_error(p, build, rng), kTolerance) << "case " << c;
    }
}

TEST(GradientCheck, WholeNetwork)
{
    Rng rng(10);
    for (int c = 0; c < kCases; ++c) {
        TetrisConfig cfg;
        const bool chain = c % 2 == 0;
        const Geometry geo = chain ? Geometry{1, 1, 7, false} : Geometry{2, 4, 4, true};
        cfg.kernels = chain ? parse_kernel_list({"(1,1),1", "(2,1),2", "(3,1),1"})
                            : parse_kernel_list({"(1,1),1", "(2,2),1", "(1,2),2"});
        cfg.filters = pick(rng, 1, 3);
        cfg.task_widths = {3, pick(rng, 2, 6), 1};
        cfg.lambda_min = 1e-3;
        cfg.lambda_max = 0.5;
        cfg.seed = static_cast<std::uint64_t>(c);
        TetrisModel model = TetrisModel::build(cfg, geo);
        const int b = pick(rng, 1, 3);
        Tensor x({b, geo.channels, geo.height, geo.width});
        for (double& v : x.values()) {
            v = rng.bernoulli(0.5) ? 1.0 : -1.0;
        }
        const Tensor target = random_tensor({b}, rng);
        std::vector<Tensor*> ptrs = model.parameters();
        double worst = 0.0;
        auto loss = [&](bool grad) {
            Graph g(grad);
            Graph::Id bottleneck = 0;
            const auto pred = model.record(g, g.constant(x), &bottleneck);
            const auto total = g.add(g.mse(pred, g.constant(target)), g.l1_penalty(bottleneck, model.lambdas()), "loss");
            if (grad) {
                g.backward(total);
            }
            return g.value(total)[0];
        };
        for (Tensor* t : ptrs) {
            t->zero_grad();
        }
        loss(true);
        for (Tensor* t : ptrs) {
            const std::vector<double> analytic(t->grad().begin(), t->grad().end());
            for (int s = 0; s < 3; ++s) {
                const std::size_t i = rng.below(t->size());
                const double keep = (*t)[i];
                (*t)[i] = keep + kStep;
                const double up = loss(false);
                (*t)[i] = keep - kStep;
                const double down = loss(false);
                (*t)[i] = keep;
                const double numeric = (up - down) / (2.0 * kStep);
                const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
                worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
            }
        }
        EXPECT_LT(worst, kTolerance) << "case " << c;
    }
}
