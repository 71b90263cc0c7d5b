#pragma once

#include "tetris/dataset.hpp"
#include "tetris/kernel.hpp"
#include "tetris/nn/graph.hpp"
#include "tetris/nn/layers.hpp"
#include "tetris/nn/optimizer.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tetris {

enum class LabelScaling { none, min_max };

std::string to_string(LabelScaling s);
LabelScaling parse_label_scaling(const std::string& text);

struct TetrisConfig {
    std::vector<KernelSpec> kernels;
    int filters = 8;
    // Full task-network widths, first = branch count, last = 1.
    std::vector<int> task_widths;
    double lambda_min = 1e-4;
    double lambda_max = 1.0;
    nn::OptimizerConfig optimizer;
    int max_epochs = 100;
    bool early_stopping = false;
    int patience = 10;
    LabelScaling label_scaling = LabelScaling::none;
    int batch_size = 64;
    double validation_fraction = 0.2;
    nn::Activation activation = nn::Activation::tanh;
    std::uint64_t seed = 0;

    void validate() const;
};

// lambda_k = exp(linear interpolation of ln lambda_min .. ln lambda_max).
// One branch takes lambda_min.
std::vector<double> log_spaced_penalties(double lambda_min, double lambda_max, std::size_t count);

// Affine map of labels into [0, 1]; identity when disabled or when all
// fitted labels coincide.
struct LabelScaler {
    bool enabled = false;
    double min = 0.0;
    double max = 1.0;

    static LabelScaler fit(LabelScaling scaling, std::span<const double> labels);
    double scale(double y) const;
    double unscale(double y) const;
};

// Stacks the selected snapshots into a [B, C, H, W] tensor of +/-1 values.
nn::Tensor make_batch(const SpinDataset& dataset, std::span<const std::size_t> indices);

struct ForwardResult {
    int batch = 0;
    int branches = 0;
    std::vector<double> prediction;   // [B], in label units unless noted
    std::vector<double> activations;  // [B, K] row-major
    double activation(int b, int k) const { return activations[static_cast<std::size_t>(b) * branches + k]; }
};

class TetrisModel {
public:
    TetrisModel() = default;

    // Deterministic initialization from config.seed.
    static TetrisModel build(const TetrisConfig& config, const Geometry& geometry);

    const Geometry& geometry() const { return geometry_; }
    std::size_t branch_count() const { return branches_.size(); }
    const std::vector<nn::ConvLayer>& branches() const { return branches_; }
    std::vector<nn::ConvLayer>& branches() { return branches_; }
    const std::vector<double>& lambdas() const { return lambdas_; }
    const nn::DenseStack& task() const { return task_; }
    nn::DenseStack& task() { return task_; }
    const LabelScaler& scaler() const { return scaler_; }
    void set_scaler(const LabelScaler& scaler) { scaler_ = scaler; }
    std::vector<KernelSpec> kernels() const;

    // Records the network on a tape. Returns the prediction node ([B,1], in
    // scaled label units) and writes the bottleneck node ([B,K]) to *bottleneck.
    nn::Graph::Id record(nn::Graph& graph, nn::Graph::Id input, nn::Graph::Id* bottleneck);

    // Tape-free evaluation of a [B,C,H,W] batch. Prediction in scaled units.
    ForwardResult forward(const nn::Tensor& batch) const;

    // Whole-dataset evaluation with predictions in label units; chunks are
    // evaluated in parallel.
    ForwardResult predict(const SpinDataset& dataset) const;

    std::vector<nn::Tensor*> parameters();
    std::size_t parameter_count() const;

private:
    Geometry geometry_;
    std::vector<nn::ConvLayer> branches_;
    std::vector<double> lambdas_;
    nn::DenseStack task_;
    LabelScaler scaler_;

    friend TetrisModel read_checkpoint(std::istream& in);
};

// Checkpoint container: "TPCK1", u32 LE header length, JSON architecture
// header, then every parameter as f64 LE in declaration order (branch
// weights and biases, then task weights and biases layer by layer).
void write_checkpoint(const TetrisModel& model, std::ostream& out);
void write_checkpoint(const TetrisModel& model, const std::filesystem::path& path);
TetrisModel read_checkpoint(std::istream& in);
TetrisModel read_checkpoint(const std::filesystem::path& path);

} // namespace tetris
