#pragma once

#include "tetris/nn/tensor.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tetris::nn {

enum class Activation { identity, tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

// Tape for reverse-mode differentiation at layer granularity. Every op
// computes its value eagerly and records a closure that propagates the
// node's gradient to its inputs. Parameter nodes alias caller-owned tensors
// and accumulate into their gradient slots.
class Graph {
public:
    using Id = std::size_t;

    // With record_gradients == false nothing is differentiable and no
    // backward closures are kept (inference mode).
    explicit Graph(bool record_gradients = true);

    Id constant(Tensor value, std::string name = "input");
    Id parameter(Tensor& param, std::string name);

    // input [B,C,H,W], weight [F,C,kr,kc], bias [F] -> [B,F,H',W'].
    Id conv2d(Id input, Id weight, Id bias, int dilation, std::string name);
    Id activation(Id x, Activation act, std::string name);
    // Fused conv2d + activation + global_average: input [B,C,H,W] -> [B].
    // Keeps only the activated map for the backward pass.
    Id branch(Id input, Id weight, Id bias, int dilation, Activation act, std::string name);
    // [B, ...] -> [B]: mean over everything but the leading axis.
    Id global_average(Id x, std::string name);
    // K tensors of shape [B] -> [B,K].
    Id concat_columns(std::span<const Id> columns, std::string name);
    // x [B,in], weight [out,in], bias [out] -> [B,out].
    Id dense(Id x, Id weight, Id bias, std::string name);
    // pred [B] or [B,1] against target [B] -> scalar.
    Id mse(Id pred, Id target, std::string name = "mse");
    // a [B,K] -> scalar (1/B) sum_b sum_k lambda_k |a_bk|.
    Id l1_penalty(Id a, std::vector<double> lambda, std::string name = "l1");
    Id add(Id a, Id b, std::string name = "add");

    const Tensor& value(Id id) const;
    std::span<const double> grad(Id id) const;
    const std::string& name(Id id) const;
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(root)/d(root) = 1 and runs the recorded closures in reverse.
    // Throws InvalidArgument if root was never recorded on this tape or is
    // not a scalar, or if gradients are not being recorded.
    void backward(Id root);

private:
    struct Node {
        Tensor owned;
        Tensor* tensor = nullptr;
        std::string name;
        bool requires_grad = false;
        std::function<void()> backward;
    };

    Id push(Tensor value, std::string name, bool requires_grad);
    Node& node(Id id);
    const Node& node(Id id) const;
    bool needs(Id id) const { return nodes_[id]->requires_grad; }
    std::span<double> grad_of(Id id) { return nodes_[id]->tensor->grad(); }

    bool record_;
    std::vector<std::unique_ptr<Node>> nodes_;
};

} // namespace tetris::nn
