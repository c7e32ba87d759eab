#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "gctx/error.hpp"

namespace gctx {

class Tape;

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);  // ShapeError on non-positive dims
std::string shape_str(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);

// Dense row-major f64 tensor. Feature maps use N,C,H,W order. The buffer is
// shared between copies and treated as immutable once an operation has
// produced it; only kernels write into freshly allocated buffers.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor full(Shape shape, double v);
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

    bool defined() const { return data_ != nullptr; }
    const Shape& shape() const { return shape_; }
    int rank() const { return int(shape_.size()); }
    int dim(int i) const { return shape_[size_t(i)]; }
    int64_t size() const { return data_ ? int64_t(data_->size()) : 0; }

    const double* data() const { return data_->data(); }
    double* raw() { return data_->data(); }  // kernel-side writes only
    const std::vector<double>& vec() const { return *data_; }

    double item() const;  // ContractError unless scalar (one element)
    double at(std::initializer_list<int> idx) const;

    bool all_finite() const;
    bool same_bits(const Tensor& other) const;
    bool same_values(const Tensor& other) const;  // == elementwise (so -0 == +0)
    double max_abs_diff(const Tensor& other) const;

    // autodiff bookkeeping: node id on the owning tape, -1 when untracked
    int node = -1;
    const Tape* owner = nullptr;

private:
    Shape shape_;
    std::shared_ptr<std::vector<double>> data_;
};

}  // namespace gctx
