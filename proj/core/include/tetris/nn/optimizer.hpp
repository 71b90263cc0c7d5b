#pragma once

#include "tetris/nn/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace tetris::nn {

enum class OptimizerKind { adagrad, adamw };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& text);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adagrad;
    double learning_rate = 1e-2;
    double weight_decay = 0.0;
    double adagrad_epsilon = 1e-10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

// Adagrad with weight decay folded into the gradient (L2 style):
//   g += wd * theta;  acc += g^2;  theta -= lr * g / (sqrt(acc) + eps)
void adagrad_step(std::span<double> params, std::span<const double> grads, std::span<double> accumulator,
                  const OptimizerConfig& config);

// AdamW with decoupled weight decay and bias correction; `step` is the
// 1-based index of this update.
void adamw_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                std::span<double> second_moment, long step, const OptimizerConfig& config);

// Optimizer state over a fixed list of parameter tensors. step() reads the
// tensors' gradient slots and throws NumericalError on non-finite ones.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::vector<Tensor*> params);

    void step();
    void zero_grad();

    long steps() const { return steps_; }
    const OptimizerConfig& config() const { return config_; }
    const std::vector<std::vector<double>>& accumulators() const { return first_; }

private:
    OptimizerConfig config_;
    std::vector<Tensor*> params_;
    std::vector<std::vector<double>> first_;   // Adagrad sum of squares, or Adam m
    std::vector<std::vector<double>> second_;  // Adam v
    long steps_ = 0;
};

} // namespace tetris::nn
