#include "tetris/error.hpp"
#include "tetris/nn/graph.hpp"
#include "tetris/tetris_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace tetris;

namespace {

TetrisConfig chain_config()
{
    TetrisConfig c;
    c.kernels = parse_kernel_list({"[(1,1),1]", "[(2,1),1]", "[(2,1),2]", "[(3,1),1]"});
    c.filters = 4;
    c.task_widths = {4, 8, 1};
    c.seed = 11;
    return c;
}

SpinDataset random_chain(int n, int count, std::uint64_t seed)
{
    SpinDataset d(Geometry{1, 1, n, false}, Provenance{});
    Rng rng(seed);
    std::vector<std::int8_t> s(static_cast<std::size_t>(n));
    for (int i = 0; i < count; ++i) {
        for (auto& x : s) {
            x = rng.bernoulli(0.5) ? 1 : -1;
        }
        d.add(s, 0.25 * (i % 4));
    }
    return d;
}

} // namespace

TEST(Penalties, LogSpacedBetweenEndpoints)
{
    const auto l = log_spaced_penalties(1e-4, 1.0, 7);
    const double want[] = {1e-4, std::pow(10, -10.0 / 3), std::pow(10, -8.0 / 3), 1e-2,
                           std::pow(10, -4.0 / 3), std::pow(10, -2.0 / 3), 1.0};
    ASSERT_EQ(l.size(), 7u);
    for (int i = 0; i < 7; ++i) {
        EXPECT_NEAR(l[static_cast<std::size_t>(i)] / want[i], 1.0, 1e-12);
    }
    EXPECT_EQ(log_spaced_penalties(1e-4, 1e-1, 1), std::vector<double>{1e-4});
    EXPECT_EQ(log_spaced_penalties(0.3, 0.3, 3), (std::vector<double>{0.3, 0.3, 0.3}));
    EXPECT_THROW(log_spaced_penalties(0.0, 1.0, 3), InvalidArgument);
}

TEST(Config, ValidatesShape)
{
    TetrisConfig c = chain_config();
    EXPECT_NO_THROW(c.validate());
    c.task_widths = {3, 8, 1};
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = chain_config();
    c.lambda_min = 2.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = chain_config();
    EXPECT_THROW(TetrisModel::build(c, Geometry{1, 1, 2, false}), InvalidArgument);
}

TEST(Model, BottleneckSizeEqualsBranchCount)
{
    const TetrisModel m = TetrisModel::build(chain_config(), Geometry{1, 1, 10, false});
    EXPECT_EQ(m.branch_count(), 4u);
    EXPECT_EQ(m.task().widths.front(), 4);
    EXPECT_EQ(m.lambdas().size(), 4u);
    EXPECT_EQ(m.branches()[2].footprint.span_cols(), 3);
}

TEST(Model, TapeAndTapeFreeForwardAgree)
{
    TetrisModel m = TetrisModel::build(chain_config(), Geometry{1, 1, 10, false});
    const SpinDataset d = random_chain(10, 7, 1);
    std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6};
    const nn::Tensor batch = make_batch(d, idx);
    const ForwardResult r = m.forward(batch);
    nn::Graph g(false);
    nn::Graph::Id bottleneck = 0;
    const auto pred = m.record(g, g.constant(batch), &bottleneck);
    for (int b = 0; b < 7; ++b) {
        EXPECT_NEAR(g.value(pred)[static_cast<std::size_t>(b)], r.prediction[static_cast<std::size_t>(b)], 1e-12);
        for (int k = 0; k < 4; ++k) {
            EXPECT_NEAR(g.value(bottleneck)[static_cast<std::size_t>(b * 4 + k)], r.activation(b, k), 1e-12);
        }
    }
}

TEST(Model, PredictionsDoNotDependOnBatchComposition)
{
    const TetrisModel m = TetrisModel::build(chain_config(), Geometry{1, 1, 10, false});
    const SpinDataset d = random_chain(10, 600, 2);
    const ForwardResult all = m.predict(d);
    std::vector<std::size_t> perm(d.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        perm[i] = (i * 7919) % perm.size();
    }
    const ForwardResult shuffled = m.predict(d.subset(perm));
    for (std::size_t i = 0; i < perm.size(); ++i) {
        EXPECT_EQ(shuffled.prediction[i], all.prediction[perm[i]]);
    }
    const std::vector<std::size_t> one{5};
    EXPECT_EQ(m.predict(d.subset(one)).prediction[0], all.prediction[5]);
}

TEST(Model, DeadBranchStaysSilentAndIrrelevant)
{
    TetrisModel m = TetrisModel::build(chain_config(), Geometry{1, 1, 10, false});
    const std::size_t dead = 2;
    m.branches()[dead].weight.fill(0.0);
    m.branches()[dead].bias.fill(0.0);
    nn::Tensor& w1 = m.task().weights.front();
    const int k = static_cast<int>(m.branch_count());
    for (int o = 0; o < w1.dim(0); ++o) {
        w1[static_cast<std::size_t>(o * k) + dead] = 0.0;
    }
    const SpinDataset d = random_chain(10, 64, 3);
    const ForwardResult before = m.predict(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(before.activations[i * m.branch_count() + dead], 0.0);
    }

    // No gradient reaches the dead branch, so an optimizer step keeps it dead.
    std::vector<std::size_t> idx(d.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    for (nn::Tensor* p : m.parameters()) {
        p->zero_grad();
    }
    nn::Graph g;
    nn::Graph::Id bottleneck = 0;
    const auto pred = m.record(g, g.constant(make_batch(d, idx)), &bottleneck);
    const auto loss = g.add(g.mse(pred, g.constant(nn::Tensor({64}, d.labels()))),
                            g.l1_penalty(bottleneck, m.lambdas()), "loss");
    g.backward(loss);
    for (double v : m.branches()[dead].weight.grad()) {
        EXPECT_EQ(v, 0.0);
    }
    for (double v : m.branches()[dead].bias.grad()) {
        EXPECT_EQ(v, 0.0);
    }

    // Whatever the dead branch's filters compute, the output ignores it.
    Rng rng(4);
    for (double& v : m.branches()[dead].weight.values()) {
        v = rng.uniform(-1, 1);
    }
    const ForwardResult after = m.predict(d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(after.prediction[i], before.prediction[i], 1e-14);
    }
}

TEST(Model, BuildIsDeterministicInSeed)
{
    const Geometry g{1, 1, 10, false};
    const TetrisModel a = TetrisModel::build(chain_config(), g);
    const TetrisModel b = TetrisModel::build(chain_config(), g);
    TetrisConfig other = chain_config();
    other.seed = 12;
    const TetrisModel c = TetrisModel::build(other, g);
    const SpinDataset d = random_chain(10, 10, 5);
    EXPECT_EQ(a.predict(d).prediction, b.predict(d).prediction);
    EXPECT_NE(a.predict(d).prediction, c.predict(d).prediction);
}

TEST(Scaler, MinMaxRoundTrip)
{
    const std::vector<double> labels{0.1, 0.7, 2.0};
    const LabelScaler s = LabelScaler::fit(LabelScaling::min_max, labels);
    EXPECT_NEAR(s.scale(0.1), 0.0, 1e-15);
    EXPECT_NEAR(s.scale(2.0), 1.0, 1e-15);
    EXPECT_NEAR(s.unscale(s.scale(0.7)), 0.7, 1e-15);
    const LabelScaler flat = LabelScaler::fit(LabelScaling::min_max, std::vector<double>{3.0, 3.0});
    EXPECT_EQ(flat.scale(3.0), 3.0);
    EXPECT_EQ(parse_label_scaling("MaxMinScaler"), LabelScaling::min_max);
}

TEST(Checkpoint, RoundTripReproducesPredictions)
{
    TetrisConfig c = chain_config();
    c.lambda_max = 0.3;
    TetrisModel m = TetrisModel::build(c, Geometry{1, 1, 10, false});
    m.set_scaler(LabelScaler{true, 0.1, 2.1});
    std::stringstream buf;
    write_checkpoint(m, buf);
    const TetrisModel back = read_checkpoint(buf);
    const SpinDataset d = random_chain(10, 50, 6);
    EXPECT_EQ(back.predict(d).prediction, m.predict(d).prediction);
    EXPECT_EQ(back.lambdas(), m.lambdas());
    EXPECT_EQ(back.kernels(), m.kernels());
    EXPECT_EQ(back.scaler().max, 2.1);
    EXPECT_EQ(back.parameter_count(), m.parameter_count());
}

TEST(Checkpoint, RejectsCorruptInput)
{
    std::stringstream bad("TPXX1....");
    EXPECT_THROW(read_checkpoint(bad), IoError);
    const TetrisModel m = TetrisModel::build(chain_config(), Geometry{1, 1, 10, false});
    std::stringstream buf;
    write_checkpoint(m, buf);
    const std::string s = buf.str();
    std::stringstream cut(s.substr(0, s.size() - 8));
    EXPECT_THROW(read_checkpoint(cut), IoError);
}
