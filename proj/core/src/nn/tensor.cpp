#include "tetris/nn/tensor.hpp"

#include "tetris/error.hpp"

#include <cmath>
#include <sstream>

namespace tetris::nn {

std::size_t numel(const Shape& shape)
{
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) {
            throw InvalidArgument("negative tensor dimension");
        }
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string to_string(const Shape& shape)
{
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? ", " : "") << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), value_(numel(shape_), fill)
{
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), value_(std::move(values))
{
    if (value_.size() != numel(shape_)) {
        throw InvalidArgument("tensor of shape " + to_string(shape_) + " given " + std::to_string(value_.size()) +
                              " values");
    }
}

std::span<double> Tensor::grad()
{
    if (grad_.size() != value_.size()) {
        grad_.assign(value_.size(), 0.0);
    }
    return grad_;
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

void Tensor::fill(double v) { std::fill(value_.begin(), value_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const
{
    if (numel(shape) != value_.size()) {
        throw InvalidArgument("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    return Tensor(std::move(shape), value_);
}

void check_finite(std::span<const double> values, const std::string& where)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw NumericalError("non-finite value (" + std::to_string(values[i]) + ") at index " + std::to_string(i) +
                                 " in " + where);
        }
    }
}

} // namespace tetris::nn
