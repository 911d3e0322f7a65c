#include "scene/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace scene {

std::string TensorShape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

Tensor::Tensor(TensorShape shape, double fill) : shape_(shape) {
    if (shape.n <= 0 || shape.c <= 0 || shape.h <= 0 || shape.w <= 0) {
        throw DimensionError("tensor shape must be positive, got " + shape.str());
    }
    data_.assign(static_cast<std::size_t>(shape.numel()), fill);
}

Tensor::Tensor(TensorShape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (shape.n <= 0 || shape.c <= 0 || shape.h <= 0 || shape.w <= 0) {
        throw DimensionError("tensor shape must be positive, got " + shape.str());
    }
    if (static_cast<std::int64_t>(data_.size()) != shape.numel()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape.str());
    }
}

double Tensor::item() const {
    if (!is_scalar()) {
        throw DimensionError("item() on non-scalar tensor of shape " + shape_.str());
    }
    return data_[0];
}

std::span<double> Tensor::grad() {
    if (!grad_) {
        grad_.emplace(data_.size(), 0.0);
    }
    return *grad_;
}

std::span<const double> Tensor::grad() const {
    if (!grad_) {
        throw ValueError("tensor has no gradient buffer");
    }
    return *grad_;
}

void Tensor::zero_grad() {
    if (grad_) {
        std::fill(grad_->begin(), grad_->end(), 0.0);
    }
}

void Tensor::accumulate_grad(std::span<const double> g) {
    if (static_cast<std::int64_t>(g.size()) != numel()) {
        throw DimensionError("gradient length mismatch for tensor " + shape_.str());
    }
    auto dst = grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
        dst[i] += g[i];
    }
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void ensure_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) {
        throw ValueError(what + " produced a non-finite value");
    }
}

void ensure_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
    if (!(a.shape() == b.shape())) {
        throw DimensionError(what + ": shape mismatch " + a.shape().str() + " vs " +
                             b.shape().str());
    }
}

}  // namespace scene
