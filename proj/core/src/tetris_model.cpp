#include "tetris/tetris_model.hpp"

#include "tetris/error.hpp"
#include "tetris/nn/ops.hpp"
#include "tetris/parallel.hpp"
#include "tetris/rng.hpp"

#include <algorithm>
#include <cmath>

namespace tetris {

std::string to_string(LabelScaling s) { return s == LabelScaling::none ? "none" : "minmax"; }

LabelScaling parse_label_scaling(const std::string& text)
{
    if (text == "none") {
        return LabelScaling::none;
    }
    if (text == "minmax" || text == "min_max" || text == "MaxMin" || text == "MaxMinScaler") {
        return LabelScaling::min_max;
    }
    throw InvalidArgument("unknown label scaling '" + text + "' (expected none|minmax)");
}

void TetrisConfig::validate() const
{
    if (kernels.empty()) {
        throw InvalidArgument("kernel list is empty");
    }
    if (filters < 1) {
        throw InvalidArgument("filters must be >= 1");
    }
    if (task_widths.size() < 2 || task_widths.front() != static_cast<int>(kernels.size()) ||
        task_widths.back() != 1) {
        throw InvalidArgument("task widths must start at the branch count (" + std::to_string(kernels.size()) +
                              ") and end at 1");
    }
    if (!(lambda_min >= 0.0) || !(lambda_max >= lambda_min)) {
        throw InvalidArgument("need 0 <= lambda_min <= lambda_max");
    }
    if (max_epochs < 0 || patience < 1 || batch_size < 1) {
        throw InvalidArgument("max_epochs >= 0, patience >= 1 and batch_size >= 1 required");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw InvalidArgument("validation fraction must lie in (0, 1)");
    }
}

std::vector<double> log_spaced_penalties(double lambda_min, double lambda_max, std::size_t count)
{
    if (count == 0) {
        return {};
    }
    if (lambda_min < 0.0 || lambda_max < lambda_min) {
        throw InvalidArgument("need 0 <= lambda_min <= lambda_max");
    }
    std::vector<double> out(count, lambda_min);
    if (count == 1 || lambda_min == lambda_max) {
        return out;
    }
    if (lambda_min == 0.0) {
        throw InvalidArgument("log spacing needs lambda_min > 0 when lambda_min != lambda_max");
    }
    const double a = std::log(lambda_min);
    const double b = std::log(lambda_max);
    for (std::size_t k = 0; k < count; ++k) {
        out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
    }
    out.back() = lambda_max;
    return out;
}

LabelScaler LabelScaler::fit(LabelScaling scaling, std::span<const double> labels)
{
    LabelScaler s;
    if (scaling == LabelScaling::none || labels.empty()) {
        return s;
    }
    const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
    if (!(*hi > *lo)) {
        return s;
    }
    s.enabled = true;
    s.min = *lo;
    s.max = *hi;
    return s;
}

double LabelScaler::scale(double y) const { return enabled ? (y - min) / (max - min) : y; }

double LabelScaler::unscale(double y) const { return enabled ? min + y * (max - min) : y; }

nn::Tensor make_batch(const SpinDataset& dataset, std::span<const std::size_t> indices)
{
    const Geometry& g = dataset.geometry();
    const auto per = static_cast<std::size_t>(g.sites());
    nn::Tensor t({static_cast<int>(indices.size()), g.channels, g.height, g.width});
    auto v = t.values();
    const auto spins = dataset.raw_spins();
    for (std::size_t b = 0; b < indices.size(); ++b) {
        if (indices[b] >= dataset.size()) {
            throw InvalidArgument("sample index out of range");
        }
        const auto src = spins.subspan(indices[b] * per, per);
        std::transform(src.begin(), src.end(), v.begin() + static_cast<std::ptrdiff_t>(b * per),
                       [](std::int8_t s) { return static_cast<double>(s); });
    }
    return t;
}

TetrisModel TetrisModel::build(const TetrisConfig& config, const Geometry& geometry)
{
    config.validate();
    TetrisModel m;
    m.geometry_ = geometry;
    Rng rng(config.seed);
    for (const KernelSpec& k : config.kernels) {
        m.branches_.push_back(nn::ConvLayer::create(k, geometry, config.filters, config.activation, rng));
    }
    m.lambdas_ = log_spaced_penalties(config.lambda_min, config.lambda_max, config.kernels.size());
    m.task_ = nn::DenseStack::create(config.task_widths, config.activation, rng);
    return m;
}

std::vector<KernelSpec> TetrisModel::kernels() const
{
    std::vector<KernelSpec> out;
    for (const auto& b : branches_) {
        out.push_back(b.kernel);
    }
    return out;
}

nn::Graph::Id TetrisModel::record(nn::Graph& graph, nn::Graph::Id input, nn::Graph::Id* bottleneck)
{
    std::vector<nn::Graph::Id> columns;
    for (std::size_t k = 0; k < branches_.size(); ++k) {
        const std::string name = "branch" + std::to_string(k);
        auto& b = branches_[k];
        const auto w = graph.parameter(b.weight, name + "/weight");
        const auto bias = graph.parameter(b.bias, name + "/bias");
        columns.push_back(graph.branch(input, w, bias, b.footprint.dilation, b.activation, name));
    }
    const auto a = graph.concat_columns(columns, "bottleneck");
    if (bottleneck != nullptr) {
        *bottleneck = a;
    }
    return task_.record(graph, a, "task");
}

ForwardResult TetrisModel::forward(const nn::Tensor& batch) const
{
    if (batch.rank() != 4 || batch.dim(1) != geometry_.channels || batch.dim(2) != geometry_.height ||
        batch.dim(3) != geometry_.width) {
        throw InvalidArgument("input batch " + nn::to_string(batch.shape()) + " does not match the model geometry");
    }
    ForwardResult r;
    r.batch = batch.dim(0);
    r.branches = static_cast<int>(branches_.size());
    r.activations.assign(static_cast<std::size_t>(r.batch) * r.branches, 0.0);
    for (int k = 0; k < r.branches; ++k) {
        const nn::Tensor h = nn::conv_forward(batch, branches_[static_cast<std::size_t>(k)]);
        const int per = static_cast<int>(h.size()) / std::max(r.batch, 1);
        std::vector<double> pooled(static_cast<std::size_t>(r.batch));
        nn::ops::row_mean_forward(r.batch, per, h.values(), pooled);
        for (int b = 0; b < r.batch; ++b) {
            r.activations[static_cast<std::size_t>(b) * r.branches + k] = pooled[static_cast<std::size_t>(b)];
        }
    }
    std::vector<double> x = r.activations;
    for (std::size_t l = 0; l < task_.weights.size(); ++l) {
        const int in = task_.widths[l];
        const int out = task_.widths[l + 1];
        std::vector<double> y(static_cast<std::size_t>(r.batch) * out);
        nn::ops::dense_forward(r.batch, in, out, x, task_.weights[l].values(), task_.biases[l].values(), y);
        if (l + 1 < task_.weights.size() && task_.hidden == nn::Activation::tanh) {
            nn::ops::tanh_forward(y, y);
        }
        x = std::move(y);
    }
    r.prediction = std::move(x);
    nn::check_finite(r.prediction, "model output");
    return r;
}

ForwardResult TetrisModel::predict(const SpinDataset& dataset) const
{
    if (!(dataset.geometry() == geometry_)) {
        throw InvalidArgument("dataset geometry does not match the model");
    }
    constexpr std::size_t chunk = 256;
    const std::size_t n = dataset.size();
    const std::size_t chunks = (n + chunk - 1) / chunk;
    ForwardResult r;
    r.batch = static_cast<int>(n);
    r.branches = static_cast<int>(branches_.size());
    r.prediction.assign(n, 0.0);
    r.activations.assign(n * branches_.size(), 0.0);
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        std::vector<std::size_t> idx(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            idx[i - lo] = i;
        }
        const ForwardResult part = forward(make_batch(dataset, idx));
        for (std::size_t i = lo; i < hi; ++i) {
            r.prediction[i] = scaler_.unscale(part.prediction[i - lo]);
        }
        std::copy(part.activations.begin(), part.activations.end(),
                  r.activations.begin() + static_cast<std::ptrdiff_t>(lo * branches_.size()));
    });
    return r;
}

std::vector<nn::Tensor*> TetrisModel::parameters()
{
    std::vector<nn::Tensor*> out;
    for (auto& b : branches_) {
        for (nn::Tensor* p : b.parameters()) {
            out.push_back(p);
        }
    }
    for (nn::Tensor* p : task_.parameters()) {
        out.push_back(p);
    }
    return out;
}

std::size_t TetrisModel::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& b : branches_) {
        n += b.weight.size() + b.bias.size();
    }
    for (std::size_t l = 0; l < task_.weights.size(); ++l) {
        n += task_.weights[l].size() + task_.biases[l].size();
    }
    return n;
}

} // namespace tetris
