// Benchmark of the OpenMP kernels against the serial reference. The parallel
// versions must also reproduce the serial results bit-exactly.

#include <chrono>
#include <cstdio>
#include <functional>

#include "gctx/kernels.hpp"
#include "gctx/ops.hpp"
#include "gctx/rng.hpp"

using namespace gctx;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_s, double parallel_s, bool bitmatch) {
    std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   %s\n", name,
                serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                bitmatch ? "bit-exact" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("kernel benchmark (serial reference vs OpenMP)\n\n");

    {
        int m = 384, k = 384, n = 384;
        Tensor a = rng_tensor(1, {m, k}, Normal{0, 1});
        Tensor b = rng_tensor(2, {k, n}, Normal{0, 1});
        Tensor cs({m, n}), cp({m, n});
        double ts = time_of([&] { kernels::serial::matmul(a.data(), b.data(), cs.raw(), m, k, n); }, 3);
        double tp = time_of([&] { kernels::matmul(a.data(), b.data(), cp.raw(), m, k, n); }, 3);
        report("matmul 384^3", ts, tp, cs.same_bits(cp));
    }
    {
        int n = 8, cin = 32, h = 32, w = 32, cout = 32;
        Tensor x = rng_tensor(3, {n, cin, h, w}, Normal{0, 1});
        Tensor wt = rng_tensor(4, {cout, cin, 3, 3}, Kaiming{cin * 9});
        Tensor ys({n, cout, h, w}), yp({n, cout, h, w});
        double ts = time_of([&] {
            kernels::serial::conv2d(x.data(), wt.data(), nullptr, ys.raw(), n, cin, h, w, cout, 3, 3, 1, 1);
        }, 3);
        double tp = time_of([&] {
            kernels::conv2d(x.data(), wt.data(), nullptr, yp.raw(), n, cin, h, w, cout, 3, 3, 1, 1);
        }, 3);
        report("conv2d 8x32x32x32 3x3", ts, tp, ys.same_bits(yp));
    }
    {
        int np = 512, d = 256;
        Tensor v = rng_tensor(5, {np, d}, Normal{0, 1});
        Tensor gs({np, np}), gp({np, np});
        double ts = time_of([&] { kernels::serial::gram(v.data(), gs.raw(), np, d); }, 3);
        double tp = time_of([&] { kernels::gram(v.data(), gp.raw(), np, d); }, 3);
        report("gram 512x256", ts, tp, gs.same_bits(gp));
    }
    {
        int64_t outer = 4096;
        int len = 512;
        Tensor x = rng_tensor(6, {int(outer), len}, Normal{0, 2});
        Tensor ys(x.shape()), yp(x.shape());
        double ts = time_of([&] { kernels::serial::softmax_slices(x.data(), ys.raw(), outer, len, 1); }, 3);
        double tp = time_of([&] { kernels::softmax_slices(x.data(), yp.raw(), outer, len, 1); }, 3);
        report("softmax 4096x512", ts, tp, ys.same_bits(yp));
    }
    return 0;
}
