#include <hexpert/nn/tensor.hpp>

#include <hexpert/errors.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace hexpert::nn {

std::size_t shape_size(const Shape& shape) noexcept
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string to_string(const Shape& shape)
{
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            out += ", ";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill)
{
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values))
{
    if (shape_size(shape_) != values_.size())
        throw DimensionError("tensor shape " + to_string(shape_) + " does not match " +
                             std::to_string(values_.size()) + " values");
}

Tensor Tensor::scalar(double v)
{
    return Tensor({1}, std::vector<double>{v});
}

Tensor Tensor::vector(std::initializer_list<double> values)
{
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
{
    return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const
{
    if (axis >= shape_.size())
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             to_string(shape_));
    return shape_[axis];
}

double& Tensor::at(std::size_t row, std::size_t col)
{
    return values_[row * shape_.back() + col];
}

double Tensor::at(std::size_t row, std::size_t col) const
{
    return values_[row * shape_.back() + col];
}

double Tensor::item() const
{
    if (values_.size() != 1)
        throw DimensionError("item() on tensor of shape " + to_string(shape_));
    return values_[0];
}

Tensor Tensor::reshaped(Shape shape) const
{
    return Tensor(std::move(shape), values_);
}

void Tensor::fill(double v) noexcept
{
    std::fill(values_.begin(), values_.end(), v);
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

} // namespace hexpert::nn
