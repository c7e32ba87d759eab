#include "gctx/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace gctx {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(size_t(shape_numel(shape_)), 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
    int64_t n = shape_numel(shape_);
    if (n != int64_t(values.size()))
        throw ShapeError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape_));
    data_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : *t.data_) x = v;
    return t;
}

double Tensor::item() const {
    if (!defined() || size() != 1)
        throw ContractError("item() requires a single-element tensor, got " + shape_str(shape_));
    return (*data_)[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
    if (int(idx.size()) != rank())
        throw ShapeError("index rank mismatch for shape " + shape_str(shape_));
    int64_t flat = 0;
    int axis = 0;
    for (int i : idx) {
        if (i < 0 || i >= shape_[size_t(axis)]) throw ShapeError("index out of range");
        flat = flat * shape_[size_t(axis)] + i;
        ++axis;
    }
    return (*data_)[size_t(flat)];
}

bool Tensor::all_finite() const {
    for (double v : *data_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::same_bits(const Tensor& other) const {
    if (shape_ != other.shape_) return false;
    return std::memcmp(data_->data(), other.data_->data(), data_->size() * sizeof(double)) == 0;
}

bool Tensor::same_values(const Tensor& other) const {
    if (shape_ != other.shape_) return false;
    for (size_t i = 0; i < data_->size(); ++i)
        if ((*data_)[i] != (*other.data_)[i]) return false;
    return true;
}

double Tensor::max_abs_diff(const Tensor& other) const {
    if (shape_ != other.shape_)
        throw ShapeError("max_abs_diff shape mismatch " + shape_str(shape_) + " vs " +
                         shape_str(other.shape_));
    double m = 0.0;
    for (size_t i = 0; i < data_->size(); ++i)
        m = std::max(m, std::fabs((*data_)[i] - (*other.data_)[i]));
    return m;
}

}  // namespace gctx
