#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scene/error.hpp"

namespace scene {

struct TensorShape {
    std::int64_t n = 0;  // batch
    std::int64_t c = 0;  // channels
    std::int64_t h = 0;  // height
    std::int64_t w = 0;  // width

    std::int64_t numel() const { return n * c * h * w; }
    bool operator==(const TensorShape&) const = default;
    std::string str() const;
};

// Dense 4-D array of doubles, contiguous row-major in (n, c, h, w), with an
// optional same-shape gradient buffer. Values are immutable by convention
// once an op has produced them; only the grad buffer is mutated afterwards.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(TensorShape shape, double fill = 0.0);
    Tensor(TensorShape shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1, 1, 1, 1}, {v}); }

    const TensorShape& shape() const { return shape_; }
    std::int64_t numel() const { return shape_.numel(); }
    bool empty() const { return data_.empty(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
        return data_[offset(n, c, h, w)];
    }
    double at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return data_[offset(n, c, h, w)];
    }
    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // scalar tensors (1,1,1,1)
    bool is_scalar() const { return shape_ == TensorShape{1, 1, 1, 1}; }
    double item() const;

    // gradient buffer
    bool has_grad() const { return grad_.has_value(); }
    std::span<double> grad();                // allocates zeros on first use
    std::span<const double> grad() const;    // throws if absent
    void zero_grad();
    void accumulate_grad(std::span<const double> g);
    void drop_grad() { grad_.reset(); }

    bool all_finite() const;

    std::int64_t offset(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }

private:
    TensorShape shape_{};
    std::vector<double> data_;
    std::optional<std::vector<double>> grad_;
};

// Throws ValueError naming `what` if any element is non-finite.
void ensure_finite(const Tensor& t, const std::string& what);
void ensure_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

}  // namespace scene
