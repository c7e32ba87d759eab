#include "gctx/ops.hpp"

#include <algorithm>
#include <cmath>

#include "gctx/kernels.hpp"
#include "gctx/rng.hpp"

namespace gctx {

namespace {

int node_of(Tape* tape, const Tensor& t) {
    return (tape && tape->tracked_here(t)) ? t.node : -1;
}

bool any_tracked(Tape* tape, std::initializer_list<const Tensor*> ts) {
    if (!tape) return false;
    for (const Tensor* t : ts)
        if (tape->tracked_here(*t)) return true;
    return false;
}

// c[i,j] = sum_p a[i,p] * b[j,p]   (a: [m,p], b: [n,p])
void matmul_nt(const double* a, const double* b, double* c, int m, int p, int n) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < p; ++t) acc += a[int64_t(i) * p + t] * b[int64_t(j) * p + t];
            c[int64_t(i) * n + j] = acc;
        }
}

// c[i,j] = sum_p a[p,i] * b[p,j]   (a: [p,m], b: [p,n])
void matmul_tn(const double* a, const double* b, double* c, int p, int m, int n) {
    for (int64_t i = 0; i < int64_t(m) * n; ++i) c[i] = 0.0;
    for (int t = 0; t < p; ++t)
        for (int i = 0; i < m; ++i) {
            double av = a[int64_t(t) * m + i];
            for (int j = 0; j < n; ++j) c[int64_t(i) * n + j] += av * b[int64_t(t) * n + j];
        }
}

struct BroadcastPlan {
    Shape out, a, b;  // padded to a common rank
};

// Restricted broadcast: pad the lower-rank shape with trailing 1s, then every
// axis must match or be 1 on one side.
BroadcastPlan broadcast_plan(const Shape& sa, const Shape& sb) {
    BroadcastPlan p;
    size_t r = std::max(sa.size(), sb.size());
    p.a = sa;
    p.b = sb;
    p.a.resize(r, 1);
    p.b.resize(r, 1);
    p.out.resize(r);
    for (size_t i = 0; i < r; ++i) {
        int da = p.a[i], db = p.b[i];
        if (da != db && da != 1 && db != 1)
            throw ShapeError("shapes " + shape_str(sa) + " and " + shape_str(sb) +
                             " do not broadcast");
        p.out[i] = std::max(da, db);
    }
    return p;
}

std::vector<int64_t> strides_of(const Shape& s) {
    std::vector<int64_t> st(s.size(), 0);
    int64_t acc = 1;
    for (size_t i = s.size(); i-- > 0;) {
        st[i] = (s[i] == 1) ? 0 : acc;  // broadcast axes contribute stride 0
        acc *= s[i];
    }
    return st;
}

template <typename F>
void broadcast_walk(const BroadcastPlan& p, F&& f) {
    auto sta = strides_of(p.a);
    auto stb = strides_of(p.b);
    int64_t n = shape_numel(p.out);
    size_t r = p.out.size();
    std::vector<int> idx(r, 0);
    for (int64_t flat = 0; flat < n; ++flat) {
        int64_t ia = 0, ib = 0;
        for (size_t d = 0; d < r; ++d) {
            ia += idx[d] * sta[d];
            ib += idx[d] * stb[d];
        }
        f(flat, ia, ib);
        for (size_t d = r; d-- > 0;) {
            if (++idx[d] < p.out[d]) break;
            idx[d] = 0;
        }
    }
}

enum class EwKind { add, mul };

Tensor ew_forward(EwKind kind, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {  // fast path, no index arithmetic
        Tensor out(a.shape());
        const double* pa = a.data();
        const double* pb = b.data();
        double* po = out.raw();
        int64_t n = out.size();
        if (kind == EwKind::add) {
#pragma omp parallel for schedule(static) if (n > 65536)
            for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
        } else {
#pragma omp parallel for schedule(static) if (n > 65536)
            for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
        }
        return out;
    }
    auto plan = broadcast_plan(a.shape(), b.shape());
    Tensor out(plan.out);
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.raw();
    if (kind == EwKind::add)
        broadcast_walk(plan, [&](int64_t o, int64_t ia, int64_t ib) { po[o] = pa[ia] + pb[ib]; });
    else
        broadcast_walk(plan, [&](int64_t o, int64_t ia, int64_t ib) { po[o] = pa[ia] * pb[ib]; });
    return out;
}

Tensor ew_op(EwKind kind, const Tensor& a, const Tensor& b, Tape* tape) {
    Tensor out = ew_forward(kind, a, b);
    if (!any_tracked(tape, {&a, &b})) return out;
    int na = node_of(tape, a), nb = node_of(tape, b);
    auto plan = broadcast_plan(a.shape(), b.shape());
    bool no_broadcast = a.shape() == b.shape();
    tape->record(
        {na, nb}, out,
        [kind, a, b, na, nb, plan, no_broadcast](Tape& tp, int self) {
            const auto& go = tp.grad_buf(self);
            if (no_broadcast) {
                if (na >= 0) {
                    auto& ga = tp.grad_buf(na);
                    const double* pb = b.data();
                    if (kind == EwKind::add)
                        for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
                    else
                        for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * pb[i];
                }
                if (nb >= 0) {
                    auto& gb = tp.grad_buf(nb);
                    const double* pa = a.data();
                    if (kind == EwKind::add)
                        for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
                    else
                        for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * pa[i];
                }
                return;
            }
            if (na >= 0) {
                auto& ga = tp.grad_buf(na);
                const double* pb = b.data();
                if (kind == EwKind::add)
                    broadcast_walk(plan, [&](int64_t o, int64_t ia, int64_t) { ga[size_t(ia)] += go[size_t(o)]; });
                else
                    broadcast_walk(plan, [&](int64_t o, int64_t ia, int64_t ib) {
                        ga[size_t(ia)] += go[size_t(o)] * pb[ib];
                    });
            }
            if (nb >= 0) {
                auto& gb = tp.grad_buf(nb);
                const double* pa = a.data();
                if (kind == EwKind::add)
                    broadcast_walk(plan, [&](int64_t o, int64_t, int64_t ib) { gb[size_t(ib)] += go[size_t(o)]; });
                else
                    broadcast_walk(plan, [&](int64_t o, int64_t ia, int64_t ib) {
                        gb[size_t(ib)] += go[size_t(o)] * pa[ia];
                    });
            }
        },
        [kind, a, b]() { return ew_forward(kind, a, b); });
    return out;
}

void softmax_extents(const Shape& s, int axis, int64_t& outer, int& len, int64_t& inner) {
    if (axis < 0 || axis >= int(s.size()))
        throw ShapeError("softmax axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(s));
    outer = 1;
    inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[size_t(i)];
    len = s[size_t(axis)];
    for (size_t i = size_t(axis) + 1; i < s.size(); ++i) inner *= s[i];
}

}  // namespace

Tensor rng_tensor(uint64_t seed, const Shape& shape, const DistSpec& dist) {
    Tensor t(shape);
    int64_t n = t.size();
    double* out = t.raw();
    if (std::holds_alternative<Uniform>(dist)) {
        auto u = std::get<Uniform>(dist);
        for (int64_t i = 0; i < n; ++i)
            out[i] = u.a + (u.b - u.a) * (double(CounterRng::word(seed, uint64_t(i)) >> 11) * 0x1.0p-53);
    } else if (std::holds_alternative<Normal>(dist)) {
        auto g = std::get<Normal>(dist);
        for (int64_t i = 0; i < n; ++i) {
            double u1 = double(CounterRng::word(seed, uint64_t(2 * i)) >> 11) * 0x1.0p-53 + 0x1.0p-54;
            double u2 = double(CounterRng::word(seed, uint64_t(2 * i + 1)) >> 11) * 0x1.0p-53;
            out[i] = g.mu + g.sigma * std::sqrt(-2.0 * std::log(u1)) *
                              std::cos(6.28318530717958647692528676655900577 * u2);
        }
    } else {
        auto k = std::get<Kaiming>(dist);
        if (k.fan_in <= 0) throw ConfigError("kaiming fan_in must be positive");
        double b = std::sqrt(6.0 / double(k.fan_in));
        for (int64_t i = 0; i < n; ++i)
            out[i] = -b + 2.0 * b * (double(CounterRng::word(seed, uint64_t(i)) >> 11) * 0x1.0p-53);
    }
    return t;
}

Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul requires rank-2 tensors, got " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
    int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (k != b.dim(0))
        throw ShapeError("matmul inner dims differ: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    Tensor c({m, n});
    kernels::matmul(a.data(), b.data(), c.raw(), m, k, n);
    if (!any_tracked(tape, {&a, &b})) return c;

    int na = node_of(tape, a), nb = node_of(tape, b);
    tape->record(
        {na, nb}, c,
        [a, b, m, k, n, na, nb](Tape& tp, int self) {
            const auto& gc = tp.grad_buf(self);
            if (na >= 0) {
                std::vector<double> tmp(size_t(m) * k);
                matmul_nt(gc.data(), b.data(), tmp.data(), m, n, k);
                auto& ga = tp.grad_buf(na);
                for (size_t i = 0; i < tmp.size(); ++i) ga[i] += tmp[i];
            }
            if (nb >= 0) {
                std::vector<double> tmp(size_t(k) * n);
                matmul_tn(a.data(), gc.data(), tmp.data(), m, k, n);
                auto& gb = tp.grad_buf(nb);
                for (size_t i = 0; i < tmp.size(); ++i) gb[i] += tmp[i];
            }
        },
        [a, b, m, k, n]() {
            Tensor fresh({m, n});
            kernels::matmul(a.data(), b.data(), fresh.raw(), m, k, n);
            return fresh;
        });
    return c;
}

Tensor transpose2d(const Tensor& x, Tape* tape) {
    if (x.rank() != 2) throw ShapeError("transpose2d requires rank 2, got " + shape_str(x.shape()));
    int m = x.dim(0), n = x.dim(1);
    auto fwd = [m, n](const Tensor& in) {
        Tensor out({n, m});
        const double* p = in.data();
        double* q = out.raw();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) q[int64_t(j) * m + i] = p[int64_t(i) * n + j];
        return out;
    };
    Tensor y = fwd(x);
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx, m, n](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gx[size_t(i) * n + j] += gy[size_t(j) * m + i];
        },
        [fwd, x]() { return fwd(x); });
    return y;
}

Tensor reshape(const Tensor& x, Shape shape, Tape* tape) {
    if (shape_numel(shape) != x.size())
        throw ShapeError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                         " changes element count");
    Tensor y(shape, x.vec());
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            for (size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
        },
        [x, shape]() { return Tensor(shape, x.vec()); });
    return y;
}

Tensor select0(const Tensor& x, int index, Tape* tape) {
    if (x.rank() < 1 || index < 0 || index >= x.dim(0))
        throw ShapeError("select0 index " + std::to_string(index) + " out of range for " +
                         shape_str(x.shape()));
    Shape rest(x.shape().begin() + 1, x.shape().end());
    if (rest.empty()) rest = {1};
    int64_t block = shape_numel(rest);
    auto fwd = [index, block, rest](const Tensor& in) {
        Tensor out(rest);
        const double* p = in.data() + int64_t(index) * block;
        std::copy(p, p + block, out.raw());
        return out;
    };
    Tensor y = fwd(x);
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx, index, block](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            for (int64_t i = 0; i < block; ++i) gx[size_t(index * block + i)] += gy[size_t(i)];
        },
        [fwd, x]() { return fwd(x); });
    return y;
}

Tensor stack0(const std::vector<Tensor>& xs, Tape* tape) {
    if (xs.empty()) throw ContractError("stack0 of an empty list");
    const Shape& inner = xs[0].shape();
    for (const Tensor& t : xs)
        if (t.shape() != inner) throw ShapeError("stack0 inputs differ in shape");
    Shape out_shape;
    out_shape.push_back(int(xs.size()));
    out_shape.insert(out_shape.end(), inner.begin(), inner.end());
    int64_t block = shape_numel(inner);
    auto fwd = [block, out_shape](const std::vector<Tensor>& ins) {
        Tensor out(out_shape);
        double* q = out.raw();
        for (size_t i = 0; i < ins.size(); ++i)
            std::copy(ins[i].data(), ins[i].data() + block, q + int64_t(i) * block);
        return out;
    };
    Tensor y = fwd(xs);
    bool tracked = false;
    std::vector<int> ids(xs.size(), -1);
    for (size_t i = 0; i < xs.size(); ++i) {
        ids[i] = node_of(tape, xs[i]);
        tracked = tracked || ids[i] >= 0;
    }
    if (!tape || !tracked) return y;
    tape->record(
        ids, y,
        [ids, block](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            for (size_t i = 0; i < ids.size(); ++i) {
                if (ids[i] < 0) continue;
                auto& gx = tp.grad_buf(ids[i]);
                for (int64_t j = 0; j < block; ++j)
                    gx[size_t(j)] += gy[size_t(int64_t(i) * block + j)];
            }
        },
        [fwd, xs]() { return fwd(xs); });
    return y;
}

Tensor slice_rows(const Tensor& x, int row0, int row1, Tape* tape) {
    if (x.rank() != 2) throw ShapeError("slice_rows requires rank 2");
    if (row0 < 0 || row1 > x.dim(0) || row0 >= row1)
        throw ShapeError("slice_rows range [" + std::to_string(row0) + "," +
                         std::to_string(row1) + ") invalid for " + shape_str(x.shape()));
    int n = x.dim(1), rows = row1 - row0;
    auto fwd = [row0, rows, n](const Tensor& in) {
        Tensor out({rows, n});
        std::copy(in.data() + int64_t(row0) * n, in.data() + int64_t(row0 + rows) * n, out.raw());
        return out;
    };
    Tensor y = fwd(x);
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx, row0, rows, n](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            for (int64_t i = 0; i < int64_t(rows) * n; ++i)
                gx[size_t(int64_t(row0) * n + i)] += gy[size_t(i)];
        },
        [fwd, x]() { return fwd(x); });
    return y;
}

Tensor softmax(const Tensor& x, int axis, Tape* tape) {
    int64_t outer, inner;
    int len;
    softmax_extents(x.shape(), axis, outer, len, inner);
    Tensor y(x.shape());
    kernels::softmax_slices(x.data(), y.raw(), outer, len, inner);
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx, y, outer, len, inner](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            const double* py = y.data();
            for (int64_t t = 0; t < outer * inner; ++t) {
                int64_t o = t / inner, i = t % inner;
                int64_t base = o * len * inner + i;
                double dot = 0.0;
                for (int j = 0; j < len; ++j)
                    dot += py[base + int64_t(j) * inner] * gy[size_t(base + int64_t(j) * inner)];
                for (int j = 0; j < len; ++j) {
                    int64_t k = base + int64_t(j) * inner;
                    gx[size_t(k)] += py[k] * (gy[size_t(k)] - dot);
                }
            }
        },
        [x, outer, len, inner]() {
            Tensor fresh(x.shape());
            kernels::softmax_slices(x.data(), fresh.raw(), outer, len, inner);
            return fresh;
        });
    return y;
}

Tensor layer_norm(const Tensor& x, double eps, const Tensor& gamma, const Tensor& beta,
                  Tape* tape) {
    if (x.rank() != 2) throw ShapeError("layer_norm requires [groups, d], got " + shape_str(x.shape()));
    int g = x.dim(0), d = x.dim(1);
    if (gamma.size() != d || beta.size() != d)
        throw ShapeError("layer_norm gamma/beta must have " + std::to_string(d) + " elements");
    if (eps < 0.0) throw ContractError("layer_norm eps must be non-negative");

    auto fwd = [g, d, eps](const Tensor& in, const Tensor& ga, const Tensor& be) {
        Tensor out({g, d});
        const double* p = in.data();
        const double* pg = ga.data();
        const double* pb = be.data();
        double* q = out.raw();
        for (int r = 0; r < g; ++r) {
            const double* row = p + int64_t(r) * d;
            double mean = 0.0;
            for (int j = 0; j < d; ++j) mean += row[j];
            mean /= d;
            double var = 0.0;
            for (int j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
            var /= d;  // biased
            double inv = 1.0 / std::sqrt(var + eps);
            for (int j = 0; j < d; ++j)
                q[int64_t(r) * d + j] = pg[j] * (row[j] - mean) * inv + pb[j];
        }
        return out;
    };
    Tensor y = fwd(x, gamma, beta);
    if (!any_tracked(tape, {&x, &gamma, &beta})) return y;
    int nx = node_of(tape, x), ng = node_of(tape, gamma), nb = node_of(tape, beta);
    tape->record(
        {nx, ng, nb}, y,
        [x, gamma, g, d, eps, nx, ng, nb](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            const double* p = x.data();
            const double* pg = gamma.data();
            for (int r = 0; r < g; ++r) {
                const double* row = p + int64_t(r) * d;
                const double* gyr = gy.data() + int64_t(r) * d;
                double mean = 0.0;
                for (int j = 0; j < d; ++j) mean += row[j];
                mean /= d;
                double var = 0.0;
                for (int j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
                var /= d;
                double inv = 1.0 / std::sqrt(var + eps);
                if (nx >= 0) {
                    auto& gx = tp.grad_buf(nx);
                    // dxhat_j = gy_j * gamma_j; project out mean and scale parts
                    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                    for (int j = 0; j < d; ++j) {
                        double xh = (row[j] - mean) * inv;
                        double dxh = gyr[j] * pg[j];
                        sum_dxhat += dxh;
                        sum_dxhat_xhat += dxh * xh;
                    }
                    for (int j = 0; j < d; ++j) {
                        double xh = (row[j] - mean) * inv;
                        double dxh = gyr[j] * pg[j];
                        gx[size_t(int64_t(r) * d + j)] +=
                            inv * (dxh - sum_dxhat / d - xh * sum_dxhat_xhat / d);
                    }
                }
                if (ng >= 0) {
                    auto& gg = tp.grad_buf(ng);
                    for (int j = 0; j < d; ++j)
                        gg[size_t(j)] += gyr[j] * (row[j] - mean) * inv;
                }
                if (nb >= 0) {
                    auto& gb = tp.grad_buf(nb);
                    for (int j = 0; j < d; ++j) gb[size_t(j)] += gyr[j];
                }
            }
        },
        [fwd, x, gamma, beta]() { return fwd(x, gamma, beta); });
    return y;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad,
              Tape* tape) {
    if (x.rank() != 4 || w.rank() != 4)
        throw ShapeError("conv2d requires x[N,Cin,H,W] and w[Cout,Cin,kh,kw]");
    int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != cin)
        throw ShapeError("conv2d channel mismatch: input " + std::to_string(cin) +
                         " vs kernel " + std::to_string(w.dim(1)));
    if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
    if (pad < 0) throw ShapeError("conv2d pad must be >= 0");
    if (kh > h + 2 * pad || kw > wd + 2 * pad)
        throw ShapeError("conv2d kernel larger than padded input");
    if (bias && bias->size() != cout)
        throw ShapeError("conv2d bias must have Cout elements");
    int ho = kernels::conv_out_extent(h, kh, stride, pad);
    int wo = kernels::conv_out_extent(wd, kw, stride, pad);

    Tensor y({n, cout, ho, wo});
    kernels::conv2d(x.data(), w.data(), bias ? bias->data() : nullptr, y.raw(), n, cin, h, wd,
                    cout, kh, kw, stride, pad);
    Tensor bcopy = bias ? *bias : Tensor();
    bool has_bias = bias != nullptr;
    if (!any_tracked(tape, {&x, &w}) && !(bias && any_tracked(tape, {bias}))) return y;
    int nx = node_of(tape, x), nw = node_of(tape, w);
    int nbias = bias ? node_of(tape, *bias) : -1;
    tape->record(
        {nx, nw, nbias}, y,
        [x, w, n, cin, h, wd, cout, kh, kw, stride, pad, ho, wo, nx, nw, nbias](Tape& tp,
                                                                                int self) {
            const auto& gy = tp.grad_buf(self);
            if (nx >= 0) {
                std::vector<double> tmp(size_t(x.size()));
                kernels::conv2d_grad_input(gy.data(), w.data(), tmp.data(), n, cin, h, wd, cout,
                                           kh, kw, stride, pad);
                auto& gx = tp.grad_buf(nx);
                for (size_t i = 0; i < tmp.size(); ++i) gx[i] += tmp[i];
            }
            if (nw >= 0) {
                std::vector<double> tmp(size_t(w.size()));
                kernels::conv2d_grad_weight(gy.data(), x.data(), tmp.data(), n, cin, h, wd, cout,
                                            kh, kw, stride, pad);
                auto& gw = tp.grad_buf(nw);
                for (size_t i = 0; i < tmp.size(); ++i) gw[i] += tmp[i];
            }
            if (nbias >= 0) {
                std::vector<double> tmp(size_t(cout), 0.0);
                kernels::conv2d_grad_bias(gy.data(), tmp.data(), n, cout, ho, wo);
                auto& gb = tp.grad_buf(nbias);
                for (size_t i = 0; i < tmp.size(); ++i) gb[i] += tmp[i];
            }
        },
        [x, w, bcopy, has_bias, n, cin, h, wd, cout, kh, kw, stride, pad, ho, wo]() {
            Tensor fresh({n, cout, ho, wo});
            kernels::conv2d(x.data(), w.data(), has_bias ? bcopy.data() : nullptr, fresh.raw(),
                            n, cin, h, wd, cout, kh, kw, stride, pad);
            return fresh;
        });
    return y;
}

Tensor relu(const Tensor& x, Tape* tape) {
    Tensor y(x.shape());
    const double* p = x.data();
    double* q = y.raw();
    int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i) q[i] = p[i] > 0.0 ? p[i] : 0.0;
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx, x](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            const double* p = x.data();
            for (size_t i = 0; i < gy.size(); ++i)
                if (p[i] > 0.0) gx[i] += gy[i];
        },
        [x]() {
            Tensor fresh(x.shape());
            const double* p = x.data();
            double* q = fresh.raw();
            for (int64_t i = 0; i < x.size(); ++i) q[i] = p[i] > 0.0 ? p[i] : 0.0;
            return fresh;
        });
    return y;
}

Tensor sigmoid(const Tensor& x, Tape* tape) {
    auto fwd = [](const Tensor& in) {
        Tensor out(in.shape());
        const double* p = in.data();
        double* q = out.raw();
        for (int64_t i = 0; i < in.size(); ++i) q[i] = 1.0 / (1.0 + std::exp(-p[i]));
        return out;
    };
    Tensor y = fwd(x);
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx, y](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            const double* py = y.data();
            for (size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * py[i] * (1.0 - py[i]);
        },
        [fwd, x]() { return fwd(x); });
    return y;
}

Tensor add(const Tensor& a, const Tensor& b, Tape* tape) { return ew_op(EwKind::add, a, b, tape); }
Tensor mul(const Tensor& a, const Tensor& b, Tape* tape) { return ew_op(EwKind::mul, a, b, tape); }

Tensor scale(const Tensor& x, double c, Tape* tape) {
    Tensor y(x.shape());
    const double* p = x.data();
    double* q = y.raw();
    for (int64_t i = 0; i < x.size(); ++i) q[i] = c * p[i];
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx, c](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            for (size_t i = 0; i < gy.size(); ++i) gx[i] += c * gy[i];
        },
        [x, c]() {
            Tensor fresh(x.shape());
            const double* p = x.data();
            double* q = fresh.raw();
            for (int64_t i = 0; i < x.size(); ++i) q[i] = c * p[i];
            return fresh;
        });
    return y;
}

Tensor rowmean(const Tensor& x, Tape* tape) {
    if (x.rank() != 2) throw ShapeError("rowmean requires rank 2, got " + shape_str(x.shape()));
    int m = x.dim(0), n = x.dim(1);
    auto fwd = [m, n](const Tensor& in) {
        Tensor out({m, 1});
        const double* p = in.data();
        double* q = out.raw();
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += p[int64_t(i) * n + j];
            q[i] = acc / n;
        }
        return out;
    };
    Tensor y = fwd(x);
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx, m, n](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gx[size_t(int64_t(i) * n + j)] += gy[size_t(i)] / n;
        },
        [fwd, x]() { return fwd(x); });
    return y;
}

Tensor sum_all(const Tensor& x, Tape* tape) {
    double acc = 0.0;
    const double* p = x.data();
    for (int64_t i = 0; i < x.size(); ++i) acc += p[i];
    Tensor y = Tensor::scalar(acc);
    if (!any_tracked(tape, {&x})) return y;
    int nx = node_of(tape, x);
    tape->record(
        {nx}, y,
        [nx](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            for (size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0];
        },
        [x]() {
            double a = 0.0;
            const double* p = x.data();
            for (int64_t i = 0; i < x.size(); ++i) a += p[i];
            return Tensor::scalar(a);
        });
    return y;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tape* tape) {
    if (logits.rank() != 2) throw ShapeError("cross_entropy requires logits [B,K]");
    int b = logits.dim(0), k = logits.dim(1);
    if (int(labels.size()) != b)
        throw ContractError("cross_entropy needs one label per row");
    for (int y : labels)
        if (y < 0 || y >= k) throw ContractError("cross_entropy label out of range");

    auto fwd = [b, k, labels](const Tensor& in) {
        const double* p = in.data();
        double total = 0.0;
        for (int r = 0; r < b; ++r) {
            const double* row = p + int64_t(r) * k;
            double mx = row[0];
            for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
            double lse = 0.0;
            for (int j = 0; j < k; ++j) lse += std::exp(row[j] - mx);
            total += (mx + std::log(lse)) - row[labels[size_t(r)]];
        }
        return Tensor::scalar(total / b);
    };
    Tensor y = fwd(logits);
    if (!any_tracked(tape, {&logits})) return y;
    int nx = node_of(tape, logits);
    tape->record(
        {nx}, y,
        [nx, logits, b, k, labels](Tape& tp, int self) {
            const auto& gy = tp.grad_buf(self);
            auto& gx = tp.grad_buf(nx);
            const double* p = logits.data();
            for (int r = 0; r < b; ++r) {
                const double* row = p + int64_t(r) * k;
                double mx = row[0];
                for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
                double lse = 0.0;
                for (int j = 0; j < k; ++j) lse += std::exp(row[j] - mx);
                for (int j = 0; j < k; ++j) {
                    double soft = std::exp(row[j] - mx) / lse;
                    double delta = (j == labels[size_t(r)]) ? 1.0 : 0.0;
                    gx[size_t(int64_t(r) * k + j)] += gy[0] * (soft - delta) / b;
                }
            }
        },
        [fwd, logits]() { return fwd(logits); });
    return y;
}

double grad_check(const std::function<Tensor(const Tensor&, Tape*)>& f, const Tensor& x,
                  double h) {
    if (!x.all_finite()) throw ContractError("grad_check input must be finite");
    Tape tape;
    Tensor xt = x;
    tape.watch(xt);
    Tensor loss = f(xt, &tape);
    if (loss.size() != 1) throw ContractError("grad_check function must be scalar-valued");
    tape.backward(loss);
    Tensor analytic = tape.grad(xt);

    double max_rel = 0.0;
    std::vector<double> base = x.vec();
    for (int64_t i = 0; i < x.size(); ++i) {
        std::vector<double> vp = base, vm = base;
        vp[size_t(i)] += h;
        vm[size_t(i)] -= h;
        double fp = f(Tensor(x.shape(), vp), nullptr).item();
        double fm = f(Tensor(x.shape(), vm), nullptr).item();
        double numeric = (fp - fm) / (2.0 * h);
        double a = analytic.data()[i];
        double rel = std::fabs(a - numeric) /
                     std::max({std::fabs(a), std::fabs(numeric), 1e-8});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace gctx
