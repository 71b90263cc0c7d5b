#include "tetris/nn/optimizer.hpp"

#include "tetris/error.hpp"

#include <cmath>

namespace tetris::nn {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adagrad ? "adagrad" : "adamw"; }

OptimizerKind parse_optimizer(const std::string& text)
{
    if (text == "adagrad" || text == "Adagrad") {
        return OptimizerKind::adagrad;
    }
    if (text == "adamw" || text == "AdamW") {
        return OptimizerKind::adamw;
    }
    throw InvalidArgument("unknown optimizer '" + text + "' (expected adagrad|adamw)");
}

void adagrad_step(std::span<double> params, std::span<const double> grads, std::span<double> accumulator,
                  const OptimizerConfig& config)
{
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + config.weight_decay * params[i];
        accumulator[i] += g * g;
        params[i] -= config.learning_rate * g / (std::sqrt(accumulator[i]) + config.adagrad_epsilon);
    }
}

void adamw_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                std::span<double> second_moment, long step, const OptimizerConfig& config)
{
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] *= 1.0 - config.learning_rate * config.weight_decay;
        first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * grads[i];
        second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * grads[i] * grads[i];
        const double m_hat = first_moment[i] / c1;
        const double v_hat = second_moment[i] / c2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    }
}

Optimizer::Optimizer(OptimizerConfig config, std::vector<Tensor*> params)
    : config_(config), params_(std::move(params))
{
    if (!(config_.learning_rate > 0.0) || config_.weight_decay < 0.0) {
        throw InvalidArgument("optimizer needs a positive learning rate and non-negative weight decay");
    }
    for (Tensor* p : params_) {
        first_.emplace_back(p->size(), 0.0);
        if (config_.kind == OptimizerKind::adamw) {
            second_.emplace_back(p->size(), 0.0);
        }
    }
}

void Optimizer::step()
{
    for (std::size_t i = 0; i < params_.size(); ++i) {
        check_finite(params_[i]->grad(), "gradient of parameter " + std::to_string(i));
    }
    ++steps_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = *params_[i];
        if (config_.kind == OptimizerKind::adagrad) {
            adagrad_step(p.values(), p.grad(), first_[i], config_);
        } else {
            adamw_step(p.values(), p.grad(), first_[i], second_[i], steps_, config_);
        }
    }
}

void Optimizer::zero_grad()
{
    for (Tensor* p : params_) {
        p->zero_grad();
    }
}

} // namespace tetris::nn
