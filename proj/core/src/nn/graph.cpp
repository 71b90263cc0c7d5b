#include "tetris/nn/graph.hpp"

#include "tetris/error.hpp"
#include "tetris/nn/ops.hpp"

#include <algorithm>

namespace tetris::nn {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation parse_activation(const std::string& text)
{
    if (text == "tanh") {
        return Activation::tanh;
    }
    if (text == "identity" || text == "linear") {
        return Activation::identity;
    }
    throw InvalidArgument("unknown activation '" + text + "'");
}

Graph::Graph(bool record_gradients) : record_(record_gradients) {}

Graph::Node& Graph::node(Id id)
{
    if (id >= nodes_.size()) {
        throw InvalidArgument("node " + std::to_string(id) + " is not on this tape");
    }
    return *nodes_[id];
}

const Graph::Node& Graph::node(Id id) const
{
    if (id >= nodes_.size()) {
        throw InvalidArgument("node " + std::to_string(id) + " is not on this tape");
    }
    return *nodes_[id];
}

Graph::Id Graph::push(Tensor value, std::string name, bool requires_grad)
{
    check_finite(value.values(), name);
    auto n = std::make_unique<Node>();
    n->owned = std::move(value);
    n->tensor = &n->owned;
    n->name = std::move(name);
    n->requires_grad = record_ && requires_grad;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

Graph::Id Graph::constant(Tensor value, std::string name) { return push(std::move(value), std::move(name), false); }

Graph::Id Graph::parameter(Tensor& param, std::string name)
{
    check_finite(param.values(), name);
    auto n = std::make_unique<Node>();
    n->tensor = &param;
    n->name = std::move(name);
    n->requires_grad = record_;
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
}

Graph::Id Graph::conv2d(Id input, Id weight, Id bias, int dilation, std::string name)
{
    const Tensor& x = value(input);
    const Tensor& w = value(weight);
    if (x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(1)) {
        throw InvalidArgument(name + ": conv2d expects input [B,C,H,W] and weight [F,C,kr,kc] with matching C");
    }
    ops::ConvShape s{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), dilation};
    if (s.out_height() < 1 || s.out_width() < 1) {
        throw InvalidArgument(name + ": kernel larger than input " + to_string(x.shape()));
    }
    Tensor out({s.batch, s.filters, s.out_height(), s.out_width()});
    ops::conv2d_forward(s, x.values(), w.values(), value(bias).values(), out.values());
    const Id id = push(std::move(out), std::move(name), needs(input) || needs(weight) || needs(bias));
    if (nodes_[id]->requires_grad) {
        nodes_[id]->backward = [this, id, input, weight, bias, s] {
            ops::conv2d_backward(s, value(input).values(), value(weight).values(), grad_of(id),
                                 needs(input) ? grad_of(input) : std::span<double>{},
                                 needs(weight) ? grad_of(weight) : std::span<double>{},
                                 needs(bias) ? grad_of(bias) : std::span<double>{});
        };
    }
    return id;
}

Graph::Id Graph::branch(Id input, Id weight, Id bias, int dilation, Activation act, std::string name)
{
    const Tensor& x = value(input);
    const Tensor& w = value(weight);
    if (x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(1)) {
        throw InvalidArgument(name + ": branch expects input [B,C,H,W] and weight [F,C,kr,kc] with matching C");
    }
    ops::ConvShape s{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), dilation};
    if (s.out_height() < 1 || s.out_width() < 1) {
        throw InvalidArgument(name + ": kernel larger than input " + to_string(x.shape()));
    }
    const bool tanh = act == Activation::tanh;
    auto activated = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.batch) * s.filters *
                                                           s.out_height() * s.out_width());
    Tensor out({s.batch});
    ops::conv_pool_forward(s, tanh, x.values(), w.values(), value(bias).values(), *activated, out.values());
    const Id id = push(std::move(out), std::move(name), needs(input) || needs(weight) || needs(bias));
    if (nodes_[id]->requires_grad) {
        nodes_[id]->backward = [this, id, input, weight, bias, s, tanh, activated] {
            ops::conv_pool_backward(s, tanh, value(input).values(), value(weight).values(), *activated, grad_of(id),
                                    needs(input) ? grad_of(input) : std::span<double>{},
                                    needs(weight) ? grad_of(weight) : std::span<double>{},
                                    needs(bias) ? grad_of(bias) : std::span<double>{});
        };
    }
    return id;
}

Graph::Id Graph::activation(Id x, Activation act, std::string name)
{
    Tensor out(value(x).shape());
    if (act == Activation::tanh) {
        ops::tanh_forward(value(x).values(), out.values());
    } else {
        std::copy(value(x).values().begin(), value(x).values().end(), out.values().begin());
    }
    const Id id = push(std::move(out), std::move(name), needs(x));
    if (nodes_[id]->requires_grad) {
        nodes_[id]->backward = [this, id, x, act] {
            if (act == Activation::tanh) {
                ops::tanh_backward(value(id).values(), grad_of(id), grad_of(x));
            } else {
                auto g = grad_of(x);
                auto up = grad_of(id);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += up[i];
                }
            }
        };
    }
    return id;
}

Graph::Id Graph::global_average(Id x, std::string name)
{
    const Tensor& in = value(x);
    if (in.rank() < 1 || in.size() == 0) {
        throw InvalidArgument(name + ": global average of an empty tensor");
    }
    const int batch = in.dim(0);
    const int n = static_cast<int>(in.size() / static_cast<std::size_t>(batch));
    Tensor out({batch});
    ops::row_mean_forward(batch, n, in.values(), out.values());
    const Id id = push(std::move(out), std::move(name), needs(x));
    if (nodes_[id]->requires_grad) {
        nodes_[id]->backward = [this, id, x, batch, n] { ops::row_mean_backward(batch, n, grad_of(id), grad_of(x)); };
    }
    return id;
}

Graph::Id Graph::concat_columns(std::span<const Id> columns, std::string name)
{
    if (columns.empty()) {
        throw InvalidArgument(name + ": nothing to concatenate");
    }
    const int batch = static_cast<int>(value(columns[0]).size());
    const int k = static_cast<int>(columns.size());
    Tensor out({batch, k});
    bool any = false;
    for (int c = 0; c < k; ++c) {
        const Tensor& col = value(columns[static_cast<std::size_t>(c)]);
        if (static_cast<int>(col.size()) != batch) {
            throw InvalidArgument(name + ": columns have different lengths");
        }
        for (int b = 0; b < batch; ++b) {
            out[static_cast<std::size_t>(b) * k + c] = col[static_cast<std::size_t>(b)];
        }
        any = any || needs(columns[static_cast<std::size_t>(c)]);
    }
    const Id id = push(std::move(out), std::move(name), any);
    if (nodes_[id]->requires_grad) {
        std::vector<Id> cols(columns.begin(), columns.end());
        nodes_[id]->backward = [this, id, cols, batch, k] {
            auto up = grad_of(id);
            for (int c = 0; c < k; ++c) {
                const Id src = cols[static_cast<std::size_t>(c)];
                if (!needs(src)) {
                    continue;
                }
                auto g = grad_of(src);
                for (int b = 0; b < batch; ++b) {
                    g[static_cast<std::size_t>(b)] += up[static_cast<std::size_t>(b) * k + c];
                }
            }
        };
    }
    return id;
}

Graph::Id Graph::dense(Id x, Id weight, Id bias, std::string name)
{
    const Tensor& in = value(x);
    const Tensor& w = value(weight);
    if (in.rank() != 2 || w.rank() != 2 || in.dim(1) != w.dim(1)) {
        throw InvalidArgument(name + ": dense expects x [B,in] and weight [out,in], got " + to_string(in.shape()) +
                              " and " + to_string(w.shape()));
    }
    const int batch = in.dim(0);
    const int nin = in.dim(1);
    const int nout = w.dim(0);
    Tensor out({batch, nout});
    ops::dense_forward(batch, nin, nout, in.values(), w.values(), value(bias).values(), out.values());
    const Id id = push(std::move(out), std::move(name), needs(x) || needs(weight) || needs(bias));
    if (nodes_[id]->requires_grad) {
        nodes_[id]->backward = [this, id, x, weight, bias, batch, nin, nout] {
            ops::dense_backward(batch, nin, nout, value(x).values(), value(weight).values(), grad_of(id),
                                needs(x) ? grad_of(x) : std::span<double>{},
                                needs(weight) ? grad_of(weight) : std::span<double>{},
                                needs(bias) ? grad_of(bias) : std::span<double>{});
        };
    }
    return id;
}

Graph::Id Graph::mse(Id pred, Id target, std::string name)
{
    if (value(pred).size() != value(target).size()) {
        throw InvalidArgument(name + ": prediction and target lengths differ");
    }
    Tensor out({1}, ops::mse_forward(value(pred).values(), value(target).values()));
    const Id id = push(std::move(out), std::move(name), needs(pred));
    if (nodes_[id]->requires_grad) {
        nodes_[id]->backward = [this, id, pred, target] {
            ops::mse_backward(value(pred).values(), value(target).values(), grad_of(id)[0], grad_of(pred));
        };
    }
    return id;
}

Graph::Id Graph::l1_penalty(Id a, std::vector<double> lambda, std::string name)
{
    const Tensor& act = value(a);
    if (act.rank() != 2 || act.dim(1) != static_cast<int>(lambda.size())) {
        throw InvalidArgument(name + ": activations " + to_string(act.shape()) + " do not match " +
                              std::to_string(lambda.size()) + " penalties");
    }
    const int batch = act.dim(0);
    Tensor out({1}, ops::l1_forward(batch, act.values(), lambda));
    const Id id = push(std::move(out), std::move(name), needs(a));
    if (nodes_[id]->requires_grad) {
        nodes_[id]->backward = [this, id, a, batch, lambda = std::move(lambda)] {
            ops::l1_backward(batch, value(a).values(), lambda, grad_of(id)[0], grad_of(a));
        };
    }
    return id;
}

Graph::Id Graph::add(Id a, Id b, std::string name)
{
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    if (x.size() != y.size()) {
        throw InvalidArgument(name + ": operand sizes differ");
    }
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] + y[i];
    }
    const Id id = push(std::move(out), std::move(name), needs(a) || needs(b));
    if (nodes_[id]->requires_grad) {
        nodes_[id]->backward = [this, id, a, b] {
            auto up = grad_of(id);
            for (const Id src : {a, b}) {
                if (!needs(src)) {
                    continue;
                }
                auto g = grad_of(src);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += up[i];
                }
            }
        };
    }
    return id;
}

const Tensor& Graph::value(Id id) const { return *node(id).tensor; }

std::span<const double> Graph::grad(Id id) const { return node(id).tensor->grad(); }

const std::string& Graph::name(Id id) const { return node(id).name; }

void Graph::backward(Id root)
{
    if (root >= nodes_.size()) {
        throw InvalidArgument("backward called before the forward pass recorded node " + std::to_string(root));
    }
    if (!record_) {
        throw InvalidArgument("backward called on a tape that does not record gradients");
    }
    Node& r = *nodes_[root];
    if (r.tensor->size() != 1) {
        throw InvalidArgument("backward root '" + r.name + "' is not a scalar");
    }
    // Intermediate gradients start from zero; parameter slots keep
    // accumulating until the caller clears them.
    for (auto& n : nodes_) {
        if (n->tensor == &n->owned) {
            n->owned.zero_grad();
        }
    }
    r.tensor->grad()[0] += 1.0;
    for (Id i = root + 1; i-- > 0;) {
        Node& n = *nodes_[i];
        if (n.requires_grad && n.backward) {
            n.backward();
        }
    }
}

} // namespace tetris::nn
