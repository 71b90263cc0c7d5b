#include "tetris/analysis/expression.hpp"
#include "tetris/analysis/symbolic_regression.hpp"
#include "tetris/correlators.hpp"
#include "tetris/nn/layers.hpp"
#include "tetris/spin_models.hpp"
#include "tetris/tetris_model.hpp"

#include <benchmark/benchmark.h>

using namespace tetris;

namespace {

nn::Tensor random_spins(int batch, const Geometry& g, Rng& rng)
{
    nn::Tensor t({batch, g.channels, g.height, g.width});
    for (auto& v : t.values()) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return t;
}

void BM_ConvForward(benchmark::State& state)
{
    const Geometry g = igt_geometry(8);
    Rng rng(1);
    auto layer = nn::ConvLayer::create(KernelSpec::parse("[(2,2),1]"), g, 8, nn::Activation::tanh, rng);
    auto batch = random_spins(static_cast<int>(state.range(0)), g, rng);
    for (auto _ : state) benchmark::DoNotOptimize(nn::conv_forward(batch, layer));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvForward)->Arg(1)->Arg(64);

void BM_ModelForward(benchmark::State& state)
{
    const Geometry g = igt_geometry(8);
    TetrisConfig c;
    c.kernels = parse_kernel_list({"[(1,1),1]", "[(2,1),1]", "[(1,2),1]", "[(2,2),1]", "[(2,1),2]", "[(1,2),2]",
                                   "[(3,1),1]", "[(3,2),1]", "[(1,3),1]", "[(2,3),1]", "[(3,3),1]"});
    c.task_widths = {11, 32, 16, 1};
    auto model = TetrisModel::build(c, g);
    Rng rng(2);
    auto batch = random_spins(64, g, rng);
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(batch));
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_ModelForward);

void BM_Lanczos(benchmark::State& state)
{
    TfimParams p;
    p.sites = static_cast<int>(state.range(0));
    p.field = 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(tfim_ground_state(p));
}
BENCHMARK(BM_Lanczos)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_MetropolisSweep(benchmark::State& state)
{
    IgtChain chain(static_cast<int>(state.range(0)), 1.0, 0.5, Rng(3));
    for (auto _ : state) chain.sweep();
    state.SetItemsProcessed(state.iterations() * 2 * state.range(0) * state.range(0));
}
BENCHMARK(BM_MetropolisSweep)->Arg(8)->Arg(16);

void BM_CorrelatorTable(benchmark::State& state)
{
    const Geometry g = igt_geometry(8);
    Rng rng(4);
    SpinDataset ds(g, Provenance{"igt", "links", 0, {0.5}});
    std::vector<std::int8_t> spins(g.sites());
    for (int i = 0; i < 200; ++i) {
        for (auto& s : spins) s = rng.uniform() < 0.5 ? -1 : 1;
        ds.add(spins, 0.5);
    }
    const auto mask = plaquette_mask();
    for (auto _ : state) {
        double sum = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) sum += mask_correlator(ds.snapshot(i), mask);
        benchmark::DoNotOptimize(sum);
    }
    state.SetItemsProcessed(state.iterations() * ds.size());
}
BENCHMARK(BM_CorrelatorTable);

void BM_ExpressionEvaluate(benchmark::State& state)
{
    // |2.8 x0 - 1| + (x1 + 0.16)^2
    auto e = Expression::binary(
        Op::add,
        Expression::unary(Op::abs, Expression::binary(Op::sub, Expression::binary(Op::mul, Expression::constant(2.8),
                                                                                   Expression::variable(0)),
                                                      Expression::constant(1.0))),
        Expression::unary(Op::square, Expression::binary(Op::add, Expression::variable(1), Expression::constant(0.16))));
    const std::size_t rows = static_cast<std::size_t>(state.range(0));
    std::vector<double> x(rows * 2), out(rows);
    Rng rng(5);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(e.evaluate_rows(x, rows, 2, out));
    state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_ExpressionEvaluate)->Arg(40)->Arg(1000);

void BM_SrFit(benchmark::State& state)
{
    const std::size_t rows = 40;
    std::vector<double> x(rows), y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        x[i] = -1.0 + 2.0 * i / (rows - 1);
        y[i] = (x[i] + 0.16) * (x[i] + 0.16);
    }
    SrConfig cfg;
    cfg.generations = static_cast<int>(state.range(0));
    cfg.seed = 6;
    for (auto _ : state) benchmark::DoNotOptimize(sr_fit(x, rows, 1, y, cfg));
}
BENCHMARK(BM_SrFit)->Arg(100)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
