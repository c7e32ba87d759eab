#pragma once

#include <cstdint>

namespace gctx::kernels {

// OpenMP-parallel inner loops. Every output element is written by exactly one
// thread and every reduction runs in a fixed sequential order, so results are
// bit-identical to the serial reference below for any thread count.

// c[m,n] = a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// y[n,cout,ho,wo] = cross-correlation of x[n,cin,h,w] with w[cout,cin,kh,kw],
// zero padding, optional bias[cout]
void conv2d(const double* x, const double* w, const double* bias, double* y,
            int n, int cin, int h, int wdt, int cout, int kh, int kw,
            int stride, int pad);

void conv2d_grad_input(const double* gy, const double* w, double* gx,
                       int n, int cin, int h, int wdt, int cout, int kh, int kw,
                       int stride, int pad);

void conv2d_grad_weight(const double* gy, const double* x, double* gw,
                        int n, int cin, int h, int wdt, int cout, int kh, int kw,
                        int stride, int pad);

void conv2d_grad_bias(const double* gy, double* gb, int n, int cout, int ho, int wo);

// softmax over the middle extent of an (outer, len, inner) view, with
// max-subtraction for stability
void softmax_slices(const double* x, double* y, int64_t outer, int len, int64_t inner);

// g[np,np] = v[np,d] * v[np,d]^T
void gram(const double* v, double* g, int np, int d);

// Serial reference implementations, kept for correctness tests and the
// kernel benchmark. Loop bodies and accumulation orders match the parallel
// versions exactly.
namespace serial {
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void conv2d(const double* x, const double* w, const double* bias, double* y,
            int n, int cin, int h, int wdt, int cout, int kh, int kw,
            int stride, int pad);
void softmax_slices(const double* x, double* y, int64_t outer, int len, int64_t inner);
void gram(const double* v, double* g, int np, int d);
}  // namespace serial

// output spatial extent of a conv/pool window sweep
int conv_out_extent(int in, int k, int stride, int pad);

}  // namespace gctx::kernels
