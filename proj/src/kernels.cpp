#include "gctx/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace gctx::kernels {

int conv_out_extent(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

namespace {

inline void matmul_row(const double* a, const double* b, double* c, int i, int k, int n) {
    double* crow = c + int64_t(i) * n;
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
    const double* arow = a + int64_t(i) * k;
    for (int p = 0; p < k; ++p) {
        double av = arow[p];
        const double* brow = b + int64_t(p) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

// y must already point at sample nidx's output block; kernel bounds are
// hoisted out of the inner loops, visiting exactly the in-range taps in the
// same ascending order as the naive guarded loops
inline void conv2d_one(const double* x, const double* w, const double* bias, double* y,
                       int cin, int h, int wdt, int kh, int kw, int stride, int pad,
                       int ho, int wo, int nidx, int co) {
    const double* xn = x + int64_t(nidx) * cin * h * wdt;
    const double* wc = w + int64_t(co) * cin * kh * kw;
    double* yc = y + int64_t(co) * ho * wo;
    for (int oh = 0; oh < ho; ++oh) {
        int ihb = oh * stride - pad;
        int r0 = std::max(0, -ihb), r1 = std::min(kh, h - ihb);
        for (int ow = 0; ow < wo; ++ow) {
            int iwb = ow * stride - pad;
            int s0 = std::max(0, -iwb), s1 = std::min(kw, wdt - iwb);
            double acc = bias ? bias[co] : 0.0;
            for (int ci = 0; ci < cin; ++ci) {
                const double* xc = xn + int64_t(ci) * h * wdt;
                const double* wk = wc + int64_t(ci) * kh * kw;
                for (int r = r0; r < r1; ++r) {
                    const double* xrow = xc + int64_t(ihb + r) * wdt + iwb;
                    const double* wrow = wk + int64_t(r) * kw;
                    for (int s = s0; s < s1; ++s) acc += xrow[s] * wrow[s];
                }
            }
            yc[int64_t(oh) * wo + ow] = acc;
        }
    }
}

inline void softmax_one(const double* x, double* y, int len, int64_t inner) {
    double mx = x[0];
    for (int i = 1; i < len; ++i) mx = std::max(mx, x[int64_t(i) * inner]);
    double sum = 0.0;
    for (int i = 0; i < len; ++i) {
        double e = std::exp(x[int64_t(i) * inner] - mx);
        y[int64_t(i) * inner] = e;
        sum += e;
    }
    for (int i = 0; i < len; ++i) y[int64_t(i) * inner] /= sum;
}

inline void gram_row(const double* v, double* g, int np, int d, int i) {
    const double* vi = v + int64_t(i) * d;
    for (int j = 0; j < np; ++j) {
        const double* vj = v + int64_t(j) * d;
        double acc = 0.0;
        for (int t = 0; t < d; ++t) acc += vi[t] * vj[t];
        g[int64_t(i) * np + j] = acc;
    }
}

}  // namespace

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static) if (int64_t(m) * k * n > 16384)
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n);
}

void conv2d(const double* x, const double* w, const double* bias, double* y,
            int n, int cin, int h, int wdt, int cout, int kh, int kw,
            int stride, int pad) {
    int ho = conv_out_extent(h, kh, stride, pad);
    int wo = conv_out_extent(wdt, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < n * cout; ++t) {
        int nidx = t / cout, co = t % cout;
        double* yn = y + int64_t(nidx) * cout * ho * wo;
        conv2d_one(x, w, bias, yn, cin, h, wdt, kh, kw, stride, pad, ho, wo, nidx, co);
    }
}

void conv2d_grad_input(const double* gy, const double* w, double* gx,
                       int n, int cin, int h, int wdt, int cout, int kh, int kw,
                       int stride, int pad) {
    int ho = conv_out_extent(h, kh, stride, pad);
    int wo = conv_out_extent(wdt, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < n * cin; ++t) {
        int nidx = t / cin, ci = t % cin;
        const double* gyn = gy + int64_t(nidx) * cout * ho * wo;
        double* gxc = gx + (int64_t(nidx) * cin + ci) * h * wdt;
        if (stride == 1) {
            // gather form with hoisted tap ranges
            for (int ih = 0; ih < h; ++ih) {
                int r0 = std::max(0, ih + pad - ho + 1), r1 = std::min(kh, ih + pad + 1);
                for (int iw = 0; iw < wdt; ++iw) {
                    int s0 = std::max(0, iw + pad - wo + 1), s1 = std::min(kw, iw + pad + 1);
                    double acc = 0.0;
                    for (int co = 0; co < cout; ++co) {
                        const double* gyc = gyn + int64_t(co) * ho * wo;
                        const double* wc = w + (int64_t(co) * cin + ci) * kh * kw;
                        for (int r = r0; r < r1; ++r) {
                            const double* gyrow = gyc + int64_t(ih + pad - r) * wo + (iw + pad);
                            const double* wrow = wc + int64_t(r) * kw;
                            for (int s = s0; s < s1; ++s) acc += gyrow[-s] * wrow[s];
                        }
                    }
                    gxc[int64_t(ih) * wdt + iw] = acc;
                }
            }
            continue;
        }
        for (int ih = 0; ih < h; ++ih) {
            for (int iw = 0; iw < wdt; ++iw) {
                double acc = 0.0;
                for (int co = 0; co < cout; ++co) {
                    const double* gyc = gyn + int64_t(co) * ho * wo;
                    const double* wc = w + (int64_t(co) * cin + ci) * kh * kw;
                    for (int r = 0; r < kh; ++r) {
                        int num = ih + pad - r;
                        if (num < 0 || num % stride != 0) continue;
                        int oh = num / stride;
                        if (oh >= ho) continue;
                        for (int s = 0; s < kw; ++s) {
                            int numw = iw + pad - s;
                            if (numw < 0 || numw % stride != 0) continue;
                            int ow = numw / stride;
                            if (ow >= wo) continue;
                            acc += gyc[int64_t(oh) * wo + ow] * wc[int64_t(r) * kw + s];
                        }
                    }
                }
                gxc[int64_t(ih) * wdt + iw] = acc;
            }
        }
    }
}

void conv2d_grad_weight(const double* gy, const double* x, double* gw,
                        int n, int cin, int h, int wdt, int cout, int kh, int kw,
                        int stride, int pad) {
    int ho = conv_out_extent(h, kh, stride, pad);
    int wo = conv_out_extent(wdt, kw, stride, pad);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < cout * cin; ++t) {
        int co = t / cin, ci = t % cin;
        double* gwc = gw + (int64_t(co) * cin + ci) * kh * kw;
        for (int r = 0; r < kh; ++r) {
            for (int s = 0; s < kw; ++s) {
                double acc = 0.0;
                for (int nidx = 0; nidx < n; ++nidx) {
                    const double* gyc = gy + (int64_t(nidx) * cout + co) * ho * wo;
                    const double* xc = x + (int64_t(nidx) * cin + ci) * h * wdt;
                    for (int oh = 0; oh < ho; ++oh) {
                        int ih = oh * stride - pad + r;
                        if (ih < 0 || ih >= h) continue;
                        const double* xrow = xc + int64_t(ih) * wdt - pad + s;
                        const double* gyrow = gyc + int64_t(oh) * wo;
                        int ow0 = 0, ow1 = wo;
                        if (stride == 1) {
                            ow0 = std::max(0, pad - s);
                            ow1 = std::min(wo, wdt + pad - s);
                            for (int ow = ow0; ow < ow1; ++ow) acc += gyrow[ow] * xrow[ow];
                        } else {
                            for (int ow = ow0; ow < ow1; ++ow) {
                                int iw = ow * stride - pad + s;
                                if (iw < 0 || iw >= wdt) continue;
                                acc += gyrow[ow] * xc[int64_t(ih) * wdt + iw];
                            }
                        }
                    }
                }
                gwc[int64_t(r) * kw + s] = acc;
            }
        }
    }
}

void conv2d_grad_bias(const double* gy, double* gb, int n, int cout, int ho, int wo) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co) {
        double acc = 0.0;
        for (int nidx = 0; nidx < n; ++nidx) {
            const double* gyc = gy + (int64_t(nidx) * cout + co) * ho * wo;
            for (int64_t i = 0; i < int64_t(ho) * wo; ++i) acc += gyc[i];
        }
        gb[co] = acc;
    }
}

void softmax_slices(const double* x, double* y, int64_t outer, int len, int64_t inner) {
#pragma omp parallel for schedule(static) if (outer * inner > 8)
    for (int64_t t = 0; t < outer * inner; ++t) {
        int64_t o = t / inner, i = t % inner;
        const double* xs = x + o * len * inner + i;
        double* ys = y + o * len * inner + i;
        softmax_one(xs, ys, len, inner);
    }
}

void gram(const double* v, double* g, int np, int d) {
#pragma omp parallel for schedule(static) if (int64_t(np) * np * d > 16384)
    for (int i = 0; i < np; ++i) gram_row(v, g, np, d, i);
}

namespace serial {

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, k, n);
}

void conv2d(const double* x, const double* w, const double* bias, double* y,
            int n, int cin, int h, int wdt, int cout, int kh, int kw,
            int stride, int pad) {
    int ho = conv_out_extent(h, kh, stride, pad);
    int wo = conv_out_extent(wdt, kw, stride, pad);
    for (int t = 0; t < n * cout; ++t) {
        int nidx = t / cout, co = t % cout;
        double* yn = y + int64_t(nidx) * cout * ho * wo;
        conv2d_one(x, w, bias, yn, cin, h, wdt, kh, kw, stride, pad, ho, wo, nidx, co);
    }
}

void softmax_slices(const double* x, double* y, int64_t outer, int len, int64_t inner) {
    for (int64_t t = 0; t < outer * inner; ++t) {
        int64_t o = t / inner, i = t % inner;
        softmax_one(x + o * len * inner + i, y + o * len * inner + i, len, inner);
    }
}

void gram(const double* v, double* g, int np, int d) {
    for (int i = 0; i < np; ++i) gram_row(v, g, np, d, i);
}

}  // namespace serial

}  // namespace gctx::kernels
