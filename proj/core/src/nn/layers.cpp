#include "tetris/nn/layers.hpp"

#include "tetris/error.hpp"
#include "tetris/nn/ops.hpp"

#include <cmath>

namespace tetris::nn {

namespace {

void fill_uniform(Tensor& t, double bound, Rng& rng)
{
    for (double& v : t.values()) {
        v = rng.uniform(-bound, bound);
    }
}

} // namespace

ConvLayer ConvLayer::create(const KernelSpec& kernel, const Geometry& geometry, int filters, Activation activation,
                            Rng& rng)
{
    if (filters < 1) {
        throw InvalidArgument("a branch needs at least one filter");
    }
    if (!fits(kernel, geometry)) {
        throw InvalidArgument("kernel " + kernel.label() + " does not fit a " + std::to_string(geometry.height) + "x" +
                              std::to_string(geometry.width) + " lattice");
    }
    ConvLayer layer;
    layer.kernel = kernel;
    layer.footprint = tetris::footprint(kernel, geometry);
    layer.in_channels = geometry.channels;
    layer.filters = filters;
    layer.activation = activation;
    layer.weight = Tensor({filters, geometry.channels, layer.footprint.rows, layer.footprint.cols});
    layer.bias = Tensor({filters});
    const int fan_in = geometry.channels * layer.footprint.rows * layer.footprint.cols;
    const double bound = std::sqrt(1.0 / fan_in);
    fill_uniform(layer.weight, bound, rng);
    fill_uniform(layer.bias, bound, rng);
    return layer;
}

Graph::Id ConvLayer::record(Graph& graph, Graph::Id input, const std::string& prefix)
{
    const auto w = graph.parameter(weight, prefix + "/weight");
    const auto b = graph.parameter(bias, prefix + "/bias");
    const auto z = graph.conv2d(input, w, b, footprint.dilation, prefix + "/conv");
    return graph.activation(z, activation, prefix + "/" + to_string(activation));
}

Tensor conv_forward(const Tensor& input, const ConvLayer& layer)
{
    const bool batched = input.rank() == 4;
    if (!batched && input.rank() != 3) {
        throw InvalidArgument("conv_forward expects [C,H,W] or [B,C,H,W]");
    }
    const int off = batched ? 1 : 0;
    ops::ConvShape s{batched ? input.dim(0) : 1,
                     input.dim(static_cast<std::size_t>(off)),
                     input.dim(static_cast<std::size_t>(off + 1)),
                     input.dim(static_cast<std::size_t>(off + 2)),
                     layer.filters,
                     layer.footprint.rows,
                     layer.footprint.cols,
                     layer.footprint.dilation};
    if (s.in_channels != layer.in_channels) {
        throw InvalidArgument("conv_forward: input has " + std::to_string(s.in_channels) + " channels, layer expects " +
                              std::to_string(layer.in_channels));
    }
    if (s.out_height() < 1 || s.out_width() < 1) {
        throw InvalidArgument("conv_forward: kernel " + layer.kernel.label() + " is larger than the input");
    }
    Shape shape = batched ? Shape{s.batch, s.filters, s.out_height(), s.out_width()}
                          : Shape{s.filters, s.out_height(), s.out_width()};
    Tensor out(shape);
    ops::conv2d_forward(s, input.values(), layer.weight.values(), layer.bias.values(), out.values());
    if (layer.activation == Activation::tanh) {
        ops::tanh_forward(out.values(), out.values());
    }
    return out;
}

DenseStack DenseStack::create(std::vector<int> widths, Activation hidden, Rng& rng)
{
    if (widths.size() < 2) {
        throw InvalidArgument("a dense stack needs at least input and output widths");
    }
    for (int w : widths) {
        if (w < 1) {
            throw InvalidArgument("dense layer widths must be positive");
        }
    }
    DenseStack stack;
    stack.widths = std::move(widths);
    stack.hidden = hidden;
    for (std::size_t l = 0; l + 1 < stack.widths.size(); ++l) {
        const int in = stack.widths[l];
        const int out = stack.widths[l + 1];
        Tensor w({out, in});
        Tensor b({out});
        const double bound = std::sqrt(1.0 / in);
        fill_uniform(w, bound, rng);
        fill_uniform(b, bound, rng);
        stack.weights.push_back(std::move(w));
        stack.biases.push_back(std::move(b));
    }
    return stack;
}

Graph::Id DenseStack::record(Graph& graph, Graph::Id x, const std::string& prefix)
{
    Graph::Id h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const std::string name = prefix + "/dense" + std::to_string(l);
        const auto w = graph.parameter(weights[l], name + "/weight");
        const auto b = graph.parameter(biases[l], name + "/bias");
        h = graph.dense(h, w, b, name);
        if (l + 1 < weights.size()) {
            h = graph.activation(h, hidden, name + "/" + to_string(hidden));
        }
    }
    return h;
}

std::vector<Tensor*> DenseStack::parameters()
{
    std::vector<Tensor*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(&weights[l]);
        out.push_back(&biases[l]);
    }
    return out;
}

} // namespace tetris::nn
