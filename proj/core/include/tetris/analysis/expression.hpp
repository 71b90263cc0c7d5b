#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tetris {

enum class Op : std::uint8_t { constant, variable, add, sub, mul, div, abs, square };

int arity(Op op);

struct Node {
    Op op = Op::constant;
    int variable = 0;
    double value = 0.0;

    bool operator==(const Node&) const = default;
};

// Expression tree stored in prefix order. Division by a denominator with
// magnitude below 1e-12 makes the evaluation invalid rather than infinite.
class Expression {
public:
    static constexpr double kDivisionGuard = 1e-12;

    Expression() : nodes_{Node{}} {}
    explicit Expression(std::vector<Node> prefix);

    static Expression constant(double value);
    static Expression variable(int index);
    static Expression unary(Op op, const Expression& arg);
    static Expression binary(Op op, const Expression& lhs, const Expression& rhs);

    const std::vector<Node>& nodes() const { return nodes_; }
    std::vector<Node>& nodes() { return nodes_; }
    int complexity() const { return static_cast<int>(nodes_.size()); }

    // One past the last node of the subtree rooted at position i.
    std::size_t subtree_end(std::size_t i) const;
    Expression subtree(std::size_t i) const;
    Expression replaced(std::size_t i, const Expression& with) const;

    // Returns false when the division guard triggers or a value is not finite.
    bool evaluate(std::span<const double> x, double& out) const;
    double evaluate(std::span<const double> x) const;  // NaN when invalid
    // Row-major features [rows, variables]. Returns false if any row is invalid.
    bool evaluate_rows(std::span<const double> features, std::size_t rows, std::size_t variables,
                       std::vector<double>& out) const;

    bool uses_variable(int index) const;
    std::vector<int> variables() const;  // sorted, distinct
    std::vector<std::size_t> constant_positions() const;
    bool is_constant() const;

    // Replaces every variable-free subtree by its value (when valid).
    Expression folded() const;

    // Infix text; constants with 6 significant digits. Variables print as
    // names[i] (or x<i> when names is short).
    std::string to_string(const std::vector<std::string>& names = {}) const;

    bool operator==(const Expression&) const = default;

private:
    std::vector<Node> nodes_;
};

std::string format_constant(double value);

} // namespace tetris
