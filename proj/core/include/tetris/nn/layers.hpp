#pragma once

#include "tetris/kernel.hpp"
#include "tetris/nn/graph.hpp"
#include "tetris/nn/tensor.hpp"
#include "tetris/rng.hpp"

#include <string>
#include <vector>

namespace tetris::nn {

// One branch convolution: weight [filters, in_channels, rows, cols] where
// (rows, cols) is the kernel footprint mapped onto the lattice geometry.
struct ConvLayer {
    KernelSpec kernel;
    Footprint footprint;
    int in_channels = 1;
    int filters = 1;
    Activation activation = Activation::tanh;
    Tensor weight;
    Tensor bias;

    // Weights and biases uniform in +-sqrt(1 / fan_in).
    static ConvLayer create(const KernelSpec& kernel, const Geometry& geometry, int filters, Activation activation,
                            Rng& rng);

    // input [B,C,H,W] -> activated feature maps [B,F,H',W'].
    Graph::Id record(Graph& graph, Graph::Id input, const std::string& prefix);
    std::vector<Tensor*> parameters() { return {&weight, &bias}; }
};

// Convenience single-pass evaluation (no tape): input [C,H,W] or
// [B,C,H,W], returns the activated output with the batch axis kept if given.
Tensor conv_forward(const Tensor& input, const ConvLayer& layer);

// Fully connected stack, widths [in, hidden..., out]; hidden layers use the
// given activation, the output layer is linear.
struct DenseStack {
    std::vector<int> widths;
    Activation hidden = Activation::tanh;
    std::vector<Tensor> weights;  // [out, in]
    std::vector<Tensor> biases;   // [out]

    static DenseStack create(std::vector<int> widths, Activation hidden, Rng& rng);

    Graph::Id record(Graph& graph, Graph::Id x, const std::string& prefix);
    std::vector<Tensor*> parameters();
};

} // namespace tetris::nn
