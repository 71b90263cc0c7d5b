#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tetris::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major array of doubles with a same-shaped gradient slot. The
// slot is allocated (zeroed) on first mutable access; until then the const
// accessor returns an empty span.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    int dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return value_.size(); }

    std::span<double> values() { return value_; }
    std::span<const double> values() const { return value_; }
    std::span<double> grad();
    std::span<const double> grad() const { return grad_; }

    double& operator[](std::size_t i) { return value_[i]; }
    double operator[](std::size_t i) const { return value_[i]; }

    void zero_grad();
    void fill(double v);
    Tensor reshaped(Shape shape) const;

private:
    Shape shape_;
    std::vector<double> value_;
    std::vector<double> grad_;
};

// Throws NumericalError naming `where` if any entry is NaN or infinite.
void check_finite(std::span<const double> values, const std::string& where);

} // namespace tetris::nn
