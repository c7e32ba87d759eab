#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "gctx/tape.hpp"
#include "gctx/tensor.hpp"

namespace gctx {

struct Uniform {
    double a = 0.0, b = 1.0;
};
struct Normal {
    double mu = 0.0, sigma = 1.0;
};
struct Kaiming {
    int fan_in = 1;  // uniform on [-sqrt(6/fan_in), +sqrt(6/fan_in)]
};
using DistSpec = std::variant<Uniform, Normal, Kaiming>;

// Deterministic: identical (seed, shape, dist) always yields identical bytes.
Tensor rng_tensor(uint64_t seed, const Shape& shape, const DistSpec& dist);

// All ops run without recording when tape is null (inference mode); with a
// tape they record adjoint and replay rules. Inputs never present on the tape
// are treated as constants.
Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor transpose2d(const Tensor& x, Tape* tape = nullptr);
Tensor reshape(const Tensor& x, Shape shape, Tape* tape = nullptr);
Tensor select0(const Tensor& x, int index, Tape* tape = nullptr);   // x[index] on axis 0
Tensor stack0(const std::vector<Tensor>& xs, Tape* tape = nullptr); // new leading axis
Tensor slice_rows(const Tensor& x, int row0, int row1, Tape* tape = nullptr);

Tensor softmax(const Tensor& x, int axis, Tape* tape = nullptr);

// x[groups, d]; per group y = gamma * (x - mean) / sqrt(var + eps) + beta,
// biased variance over the d elements
Tensor layer_norm(const Tensor& x, double eps, const Tensor& gamma, const Tensor& beta,
                  Tape* tape = nullptr);
constexpr double kLayerNormEps = 1e-5;

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad,
              Tape* tape = nullptr);

Tensor relu(const Tensor& x, Tape* tape = nullptr);
Tensor sigmoid(const Tensor& x, Tape* tape = nullptr);

// Broadcast rule: the lower-rank shape is padded with trailing size-1 axes,
// then every axis must match or be 1 on one side (covers CxMxN maps against
// Cx1x1 context vectors, row/column vectors against matrices, and scalars).
Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor mul(const Tensor& a, const Tensor& b, Tape* tape = nullptr);
Tensor scale(const Tensor& x, double c, Tape* tape = nullptr);

Tensor rowmean(const Tensor& x, Tape* tape = nullptr);  // [m,n] -> [m,1]
Tensor sum_all(const Tensor& x, Tape* tape = nullptr);  // -> [1]

// mean over rows of -log softmax(logits)[row, label]
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     Tape* tape = nullptr);

// Central-difference check of the tape gradient of a scalar-valued function.
// Per coordinate the relative error is |analytic - numeric| divided by
// max(|analytic|, |numeric|, 1e-8); returns the maximum over coordinates.
double grad_check(const std::function<Tensor(const Tensor&, Tape*)>& f, const Tensor& x,
                  double h = 1e-5);

}  // namespace gctx
