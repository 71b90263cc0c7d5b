#include "tetris/analysis/expression.hpp"

#include "tetris/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace tetris {

int arity(Op op)
{
    switch (op) {
    case Op::constant:
    case Op::variable:
        return 0;
    case Op::abs:
    case Op::square:
        return 1;
    default:
        return 2;
    }
}

Expression::Expression(std::vector<Node> prefix) : nodes_(std::move(prefix))
{
    if (nodes_.empty()) {
        throw InvalidArgument("empty expression");
    }
    if (subtree_end(0) != nodes_.size()) {
        throw InvalidArgument("malformed prefix expression");
    }
}

Expression Expression::constant(double value)
{
    Expression e;
    e.nodes_[0].value = value;
    return e;
}

Expression Expression::variable(int index)
{
    if (index < 0) {
        throw InvalidArgument("negative variable index");
    }
    Expression e;
    e.nodes_[0] = Node{Op::variable, index, 0.0};
    return e;
}

Expression Expression::unary(Op op, const Expression& arg)
{
    if (arity(op) != 1) {
        throw InvalidArgument("not a unary operator");
    }
    std::vector<Node> n{Node{op, 0, 0.0}};
    n.insert(n.end(), arg.nodes_.begin(), arg.nodes_.end());
    return Expression(std::move(n));
}

Expression Expression::binary(Op op, const Expression& lhs, const Expression& rhs)
{
    if (arity(op) != 2) {
        throw InvalidArgument("not a binary operator");
    }
    std::vector<Node> n{Node{op, 0, 0.0}};
    n.insert(n.end(), lhs.nodes_.begin(), lhs.nodes_.end());
    n.insert(n.end(), rhs.nodes_.begin(), rhs.nodes_.end());
    return Expression(std::move(n));
}

std::size_t Expression::subtree_end(std::size_t i) const
{
    std::size_t need = 1;
    while (need > 0) {
        if (i >= nodes_.size()) {
            throw InvalidArgument("malformed prefix expression");
        }
        need += static_cast<std::size_t>(arity(nodes_[i].op));
        --need;
        ++i;
    }
    return i;
}

Expression Expression::subtree(std::size_t i) const
{
    const auto end = subtree_end(i);
    Expression e;
    e.nodes_.assign(nodes_.begin() + static_cast<std::ptrdiff_t>(i), nodes_.begin() + static_cast<std::ptrdiff_t>(end));
    return e;
}

Expression Expression::replaced(std::size_t i, const Expression& with) const
{
    const auto end = subtree_end(i);
    Expression e;
    e.nodes_.clear();
    e.nodes_.reserve(nodes_.size() - (end - i) + with.nodes_.size());
    e.nodes_.insert(e.nodes_.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
    e.nodes_.insert(e.nodes_.end(), with.nodes_.begin(), with.nodes_.end());
    e.nodes_.insert(e.nodes_.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
    return e;
}

namespace {

// Applies op to the operand(s); a is the left operand. Returns false on a
// guarded division.
inline bool apply(Op op, double a, double b, double& out)
{
    switch (op) {
    case Op::add:
        out = a + b;
        return true;
    case Op::sub:
        out = a - b;
        return true;
    case Op::mul:
        out = a * b;
        return true;
    case Op::div:
        if (std::abs(b) < Expression::kDivisionGuard) {
            return false;
        }
        out = a / b;
        return true;
    case Op::abs:
        out = std::abs(a);
        return true;
    case Op::square:
        out = a * a;
        return true;
    default:
        return false;
    }
}

} // namespace

bool Expression::evaluate(std::span<const double> x, double& out) const
{
    double stack[64];
    std::vector<double> big;
    double* s = stack;
    if (nodes_.size() > 64) {
        big.resize(nodes_.size());
        s = big.data();
    }
    std::size_t top = 0;
    for (std::size_t k = nodes_.size(); k-- > 0;) {
        const Node& n = nodes_[k];
        switch (n.op) {
        case Op::constant:
            s[top++] = n.value;
            break;
        case Op::variable:
            if (static_cast<std::size_t>(n.variable) >= x.size()) {
                throw InvalidArgument("expression variable index out of range");
            }
            s[top++] = x[static_cast<std::size_t>(n.variable)];
            break;
        default:
            if (arity(n.op) == 1) {
                if (!apply(n.op, s[top - 1], 0.0, s[top - 1])) {
                    return false;
                }
            } else {
                double r;
                if (!apply(n.op, s[top - 1], s[top - 2], r)) {
                    return false;
                }
                --top;
                s[top - 1] = r;
            }
        }
    }
    out = s[0];
    return std::isfinite(out);
}

double Expression::evaluate(std::span<const double> x) const
{
    double v;
    return evaluate(x, v) ? v : std::numeric_limits<double>::quiet_NaN();
}

bool Expression::evaluate_rows(std::span<const double> features, std::size_t rows, std::size_t variables,
                               std::vector<double>& out) const
{
    if (features.size() != rows * variables) {
        throw InvalidArgument("feature matrix size does not match rows x variables");
    }
    for (const Node& n : nodes_) {
        if (n.op == Op::variable && static_cast<std::size_t>(n.variable) >= variables) {
            throw InvalidArgument("expression variable index out of range");
        }
    }
    out.assign(rows, 0.0);
    // Column-wise stack evaluation over all rows at once.
    std::vector<std::vector<double>> stack;
    stack.reserve(nodes_.size());
    std::size_t top = 0;
    auto push = [&]() -> std::vector<double>& {
        if (top == stack.size()) {
            stack.emplace_back(rows);
        }
        return stack[top++];
    };
    for (std::size_t k = nodes_.size(); k-- > 0;) {
        const Node& n = nodes_[k];
        if (n.op == Op::constant) {
            auto& v = push();
            std::fill(v.begin(), v.end(), n.value);
        } else if (n.op == Op::variable) {
            auto& v = push();
            for (std::size_t r = 0; r < rows; ++r) {
                v[r] = features[r * variables + static_cast<std::size_t>(n.variable)];
            }
        } else if (arity(n.op) == 1) {
            auto& a = stack[top - 1];
            if (n.op == Op::abs) {
                for (double& v : a) {
                    v = std::abs(v);
                }
            } else {
                for (double& v : a) {
                    v *= v;
                }
            }
        } else {
            auto& a = stack[top - 1];
            const auto& b = stack[top - 2];
            switch (n.op) {
            case Op::add:
                for (std::size_t r = 0; r < rows; ++r) a[r] += b[r];
                break;
            case Op::sub:
                for (std::size_t r = 0; r < rows; ++r) a[r] -= b[r];
                break;
            case Op::mul:
                for (std::size_t r = 0; r < rows; ++r) a[r] *= b[r];
                break;
            default:
                for (std::size_t r = 0; r < rows; ++r) {
                    if (std::abs(b[r]) < kDivisionGuard) {
                        return false;
                    }
                    a[r] /= b[r];
                }
            }
            std::swap(stack[top - 1], stack[top - 2]);
            --top;
        }
    }
    out = stack[0];
    return std::all_of(out.begin(), out.end(), [](double v) { return std::isfinite(v); });
}

bool Expression::uses_variable(int index) const
{
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [&](const Node& n) { return n.op == Op::variable && n.variable == index; });
}

std::vector<int> Expression::variables() const
{
    std::vector<int> v;
    for (const Node& n : nodes_) {
        if (n.op == Op::variable) {
            v.push_back(n.variable);
        }
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<std::size_t> Expression::constant_positions() const
{
    std::vector<std::size_t> p;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].op == Op::constant) {
            p.push_back(i);
        }
    }
    return p;
}

bool Expression::is_constant() const
{
    return std::none_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.op == Op::variable; });
}

Expression Expression::folded() const
{
    std::vector<Node> out;
    out.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size();) {
        const std::size_t end = subtree_end(i);
        bool has_var = false;
        for (std::size_t k = i; k < end; ++k) {
            has_var = has_var || nodes_[k].op == Op::variable;
        }
        if (!has_var && end - i > 1) {
            double v;
            if (subtree(i).evaluate({}, v)) {
                out.push_back(Node{Op::constant, 0, v});
                i = end;
                continue;
            }
        }
        out.push_back(nodes_[i]);
        ++i;
    }
    return Expression(std::move(out));
}

std::string format_constant(double value)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

namespace {

std::string render(const std::vector<Node>& n, std::size_t& i, const std::vector<std::string>& names)
{
    const Node& node = n[i++];
    switch (node.op) {
    case Op::constant: {
        std::string s = format_constant(node.value);
        return node.value < 0 ? "(" + s + ")" : s;
    }
    case Op::variable:
        return static_cast<std::size_t>(node.variable) < names.size() ? names[static_cast<std::size_t>(node.variable)]
                                                                     : "x" + std::to_string(node.variable);
    case Op::abs:
        return "|" + render(n, i, names) + "|";
    case Op::square: {
        // Binary children already carry parentheses.
        const bool bare = arity(n[i].op) == 2 || n[i].op == Op::abs ||
                          (n[i].op == Op::variable || (n[i].op == Op::constant && n[i].value >= 0));
        std::string a = render(n, i, names);
        return bare ? a + "^2" : "(" + a + ")^2";
    }
    default: {
        std::string a = render(n, i, names);
        std::string b = render(n, i, names);
        const char* sym = node.op == Op::add ? " + " : node.op == Op::sub ? " - " : node.op == Op::mul ? " * " : " / ";
        return "(" + a + sym + b + ")";
    }
    }
}

} // namespace

std::string Expression::to_string(const std::vector<std::string>& names) const
{
    std::size_t i = 0;
    std::string s = render(nodes_, i, names);
    if (s.size() > 2 && s.front() == '(' && s.back() == ')' && arity(nodes_[0].op) == 2) {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

} // namespace tetris
