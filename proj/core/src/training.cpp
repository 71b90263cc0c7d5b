#include "tetris/training.hpp"

#include "tetris/error.hpp"
#include "tetris/nn/ops.hpp"
#include "tetris/parallel.hpp"
#include "tetris/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

namespace tetris {

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

struct Evaluation {
    double mse = 0.0;
    double loss = 0.0;
    std::vector<double> mean_abs;
};

Evaluation evaluate(const TetrisModel& model, const SpinDataset& dataset, std::span<const std::size_t> indices)
{
    Evaluation e;
    const std::size_t k = model.branch_count();
    e.mean_abs.assign(k, 0.0);
    if (indices.empty()) {
        return e;
    }
    const auto& scaler = model.scaler();
    constexpr std::size_t chunk = 512;
    for (std::size_t lo = 0; lo < indices.size(); lo += chunk) {
        const auto part = indices.subspan(lo, std::min(chunk, indices.size() - lo));
        const ForwardResult r = model.forward(make_batch(dataset, part));
        for (std::size_t b = 0; b < part.size(); ++b) {
            const double d = r.prediction[b] - scaler.scale(dataset.label(part[b]));
            e.mse += d * d;
            for (std::size_t j = 0; j < k; ++j) {
                const double a = std::abs(r.activations[b * k + j]);
                e.mean_abs[j] += a;
                e.loss += model.lambdas()[j] * a;
            }
        }
    }
    const auto n = static_cast<double>(indices.size());
    e.mse /= n;
    e.loss = e.loss / n + e.mse;
    for (double& a : e.mean_abs) {
        a /= n;
    }
    return e;
}

} // namespace

void write_trace_csv(const TrainTrace& trace, std::ostream& out)
{
    out << "epoch,train_loss,train_mse,val_loss,val_mse";
    for (const auto& k : trace.kernels) {
        out << ",\"a " << k << '"';
    }
    out << '\n';
    out.precision(10);
    for (const auto& e : trace.epochs) {
        out << e.epoch << ',' << e.train_loss << ',' << e.train_mse << ',' << e.val_loss << ',' << e.val_mse;
        for (double a : e.mean_abs_activation) {
            out << ',' << a;
        }
        out << '\n';
    }
}

Split stratified_split(std::span<const double> labels, double fraction, std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw InvalidArgument("validation fraction must lie in (0, 1)");
    }
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        groups[labels[i]].push_back(i);
    }
    Rng rng = Rng::stream(seed, 0x5b11);
    Split s;
    for (auto& [label, idx] : groups) {
        shuffle(idx, rng);
        auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
        if (idx.size() >= 2) {
            take = std::clamp<std::size_t>(take, 1, idx.size() - 1);
        } else {
            take = 0;
        }
        s.validation.insert(s.validation.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
        s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.validation.begin(), s.validation.end());
    return s;
}

double r_squared(std::span<const double> prediction, std::span<const double> target)
{
    if (prediction.size() != target.size() || target.empty()) {
        throw InvalidArgument("r_squared needs two equal, non-empty series");
    }
    const double mean = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(target.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        ss_res += (target[i] - prediction[i]) * (target[i] - prediction[i]);
        ss_tot += (target[i] - mean) * (target[i] - mean);
    }
    if (ss_tot == 0.0) {
        return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    }
    return 1.0 - ss_res / ss_tot;
}

TrainTrace train(TetrisModel& model, const SpinDataset& dataset, const TetrisConfig& config,
                 const EpochCallback& on_epoch)
{
    config.validate();
    if (dataset.empty()) {
        throw InvalidArgument("cannot train on an empty dataset");
    }
    if (!(dataset.geometry() == model.geometry())) {
        throw InvalidArgument("dataset geometry does not match the model");
    }
    TrainTrace trace;
    for (const auto& k : model.kernels()) {
        trace.kernels.push_back(k.label());
    }
    Split split = stratified_split(dataset.labels(), config.validation_fraction, config.seed);
    if (split.train.empty()) {
        split.train = split.validation;
    }
    trace.train_indices = split.train;
    trace.validation_indices = split.validation;
    const auto& val = split.validation.empty() ? split.train : split.validation;

    model.set_scaler(LabelScaler::fit(config.label_scaling, dataset.labels()));
    const LabelScaler& scaler = model.scaler();

    nn::Optimizer optimizer(config.optimizer, model.parameters());
    Rng rng = Rng::stream(config.seed, 0x7a11);
    std::vector<std::size_t> order = split.train;
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        double mse_sum = 0.0;
        for (std::size_t lo = 0; lo < order.size(); lo += batch_size) {
            const std::span<const std::size_t> idx(order.data() + lo, std::min(batch_size, order.size() - lo));
            std::vector<double> target(idx.size());
            for (std::size_t b = 0; b < idx.size(); ++b) {
                target[b] = scaler.scale(dataset.label(idx[b]));
            }
            nn::Graph graph;
            const auto input = graph.constant(make_batch(dataset, idx));
            const auto y = graph.constant(nn::Tensor({static_cast<int>(idx.size())}, std::move(target)), "target");
            nn::Graph::Id a = 0;
            const auto pred = model.record(graph, input, &a);
            const auto mse = graph.mse(pred, y);
            const auto loss = graph.add(mse, graph.l1_penalty(a, model.lambdas()), "loss");
            optimizer.zero_grad();
            graph.backward(loss);
            optimizer.step();
            const auto weight = static_cast<double>(idx.size());
            loss_sum += graph.value(loss)[0] * weight;
            mse_sum += graph.value(mse)[0] * weight;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.train_mse = mse_sum / static_cast<double>(order.size());
        if (!std::isfinite(rec.train_loss)) {
            throw NumericalError("training diverged at epoch " + std::to_string(epoch) + " (loss is not finite)");
        }
        const Evaluation ev = evaluate(model, dataset, val);
        rec.val_loss = ev.loss;
        rec.val_mse = ev.mse;
        rec.mean_abs_activation = ev.mean_abs;
        trace.epochs.push_back(rec);
        if (on_epoch) {
            on_epoch(trace.epochs.back());
        }
        if (config.early_stopping) {
            if (rec.val_loss < best) {
                best = rec.val_loss;
                since_best = 0;
            } else if (++since_best >= config.patience) {
                trace.stopped_early = true;
                break;
            }
        }
    }
    return trace;
}

std::vector<BranchActivity> branch_activity(const TetrisModel& model, const SpinDataset& dataset)
{
    const std::size_t k = model.branch_count();
    std::vector<BranchActivity> out(k);
    if (dataset.empty()) {
        throw InvalidArgument("branch activity needs a non-empty dataset");
    }
    const ForwardResult r = model.predict(dataset);
    for (std::size_t j = 0; j < k; ++j) {
        out[j].branch = j;
        out[j].kernel = model.branches()[j].kernel;
        double s = 0.0;
        for (std::size_t b = 0; b < dataset.size(); ++b) {
            s += std::abs(r.activations[b * k + j]);
        }
        out[j].mean_abs = s / static_cast<double>(dataset.size());
    }
    double top = 0.0;
    for (const auto& a : out) {
        top = std::max(top, a.mean_abs);
    }
    for (auto& a : out) {
        a.normalized = top > 0.0 ? a.mean_abs / top : 0.0;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const BranchActivity& x, const BranchActivity& y) { return x.mean_abs > y.mean_abs; });
    return out;
}

std::vector<BranchActivity> dominant_branches(const TetrisModel& model, const SpinDataset& dataset, double threshold)
{
    auto all = branch_activity(model, dataset);
    std::erase_if(all, [&](const BranchActivity& a) { return a.mean_abs == 0.0 || a.normalized < threshold; });
    return all;
}

SweepResult lambda_sweep(const TetrisConfig& config, const SpinDataset& dataset,
                         const std::vector<double>& lambda_max_values, int repeats)
{
    if (repeats < 1) {
        throw InvalidArgument("lambda sweep needs repeats >= 1");
    }
    if (lambda_max_values.empty()) {
        throw InvalidArgument("lambda sweep needs at least one lambda_max");
    }
    SweepResult result;
    for (const auto& k : config.kernels) {
        result.kernels.push_back(k.label());
    }
    const std::size_t runs = lambda_max_values.size() * static_cast<std::size_t>(repeats);
    result.rows.resize(runs);
    parallel_for(runs, [&](std::size_t i) {
        TetrisConfig c = config;
        c.lambda_max = lambda_max_values[i / static_cast<std::size_t>(repeats)];
        c.lambda_min = std::min(c.lambda_min, c.lambda_max);
        c.seed = config.seed + i % static_cast<std::size_t>(repeats);
        TetrisModel m = TetrisModel::build(c, dataset.geometry());
        const TrainTrace trace = train(m, dataset, c);
        const SpinDataset val = dataset.subset(trace.validation_indices.empty() ? trace.train_indices
                                                                                : trace.validation_indices);
        const ForwardResult r = m.predict(val);
        SweepRow row;
        row.lambda_max = c.lambda_max;
        row.seed = c.seed;
        row.r2 = r_squared(r.prediction, val.labels());
        row.normalized.assign(m.branch_count(), 0.0);
        for (const auto& a : branch_activity(m, val)) {
            row.normalized[a.branch] = a.normalized;
            if (row.dominant.empty() && a.mean_abs > 0.0) {
                row.dominant = a.kernel.label();
            }
        }
        result.rows[i] = std::move(row);
    });
    for (std::size_t v = 0; v < lambda_max_values.size(); ++v) {
        SweepSummary s;
        s.lambda_max = lambda_max_values[v];
        s.mean_normalized.assign(config.kernels.size(), 0.0);
        for (int r = 0; r < repeats; ++r) {
            const SweepRow& row = result.rows[v * static_cast<std::size_t>(repeats) + static_cast<std::size_t>(r)];
            s.mean_r2 += row.r2 / repeats;
            for (std::size_t j = 0; j < row.normalized.size(); ++j) {
                s.mean_normalized[j] += row.normalized[j] / repeats;
            }
        }
        const auto top = std::max_element(s.mean_normalized.begin(), s.mean_normalized.end());
        if (top != s.mean_normalized.end() && *top > 0.0) {
            s.dominant = result.kernels[static_cast<std::size_t>(top - s.mean_normalized.begin())];
        }
        result.summary.push_back(std::move(s));
    }
    return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out)
{
    out << "lambda_max,seed,r2,dominant";
    for (const auto& k : result.kernels) {
        out << ",\"" << k << '"';
    }
    out << '\n';
    out.precision(10);
    for (const auto& row : result.rows) {
        out << row.lambda_max << ',' << row.seed << ',' << row.r2 << ",\"" << row.dominant << '"';
        for (double a : row.normalized) {
            out << ',' << a;
        }
        out << '\n';
    }
}

void write_sweep_summary_csv(const SweepResult& result, std::ostream& out)
{
    out << "lambda_max,mean_r2,dominant";
    for (const auto& k : result.kernels) {
        out << ",\"" << k << '"';
    }
    out << '\n';
    out.precision(10);
    for (const auto& s : result.summary) {
        out << s.lambda_max << ',' << s.mean_r2 << ",\"" << s.dominant << '"';
        for (double a : s.mean_normalized) {
            out << ',' << a;
        }
        out << '\n';
    }
}

} // namespace tetris
