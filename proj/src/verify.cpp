#include "gctx/verify.hpp"

#include <algorithm>
#include <cmath>

#include "gctx/ops.hpp"
#include "gctx/rng.hpp"

namespace gctx {

namespace {

Tensor weight_head(uint64_t seed, const Shape& shape) {
    return rng_tensor(CounterRng::derive(seed, "head"), shape, Normal{0.0, 1.0});
}

// scalar head that keeps per-coordinate gradients nontrivial
Tensor weighted_sum(const Tensor& t, uint64_t seed, Tape* tape) {
    return sum_all(mul(t, weight_head(seed, t.shape()), tape), tape);
}

double op_suite_worst(const char* which, int nseeds) {
    double worst = 0.0;
    for (int s = 0; s < nseeds; ++s) {
        uint64_t seed = uint64_t(s);
        std::string w = which;
        if (w == "matmul") {
            Tensor a = rng_tensor(CounterRng::derive(seed, "a"), {3, 4}, Normal{0, 1});
            Tensor b = rng_tensor(CounterRng::derive(seed, "b"), {4, 5}, Normal{0, 1});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(matmul(t, b, tp), seed, tp);
            }, a));
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(matmul(a, t, tp), seed, tp);
            }, b));
        } else if (w == "softmax") {
            Tensor x = rng_tensor(seed, {4, 5}, Normal{0, 2});
            for (int axis = 0; axis < 2; ++axis)
                worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                    return weighted_sum(softmax(t, axis, tp), seed, tp);
                }, x));
        } else if (w == "layer_norm") {
            Tensor x = rng_tensor(seed, {3, 6}, Normal{0, 2});
            Tensor gamma = rng_tensor(CounterRng::derive(seed, "g"), {6}, Uniform{0.5, 1.5});
            Tensor beta = rng_tensor(CounterRng::derive(seed, "be"), {6}, Normal{0, 1});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(layer_norm(t, 1e-5, gamma, beta, tp), seed, tp);
            }, x));
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(layer_norm(x, 1e-5, t, beta, tp), seed, tp);
            }, gamma));
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(layer_norm(x, 1e-5, gamma, t, tp), seed, tp);
            }, beta));
        } else if (w == "conv2d") {
            Tensor x = rng_tensor(seed, {2, 3, 5, 5}, Normal{0, 1});
            Tensor kw = rng_tensor(CounterRng::derive(seed, "w"), {4, 3, 3, 3}, Kaiming{27});
            Tensor bias = rng_tensor(CounterRng::derive(seed, "b"), {4}, Normal{0, 0.2});
            auto head = [&](const Tensor& xx, const Tensor& ww, Tape* tp) {
                return weighted_sum(conv2d(xx, ww, &bias, 2, 1, tp), seed, tp);
            };
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return head(t, kw, tp);
            }, x));
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return head(x, t, tp);
            }, kw));
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                Tensor b2 = t;
                if (tp) tp->watch(b2);
                return weighted_sum(conv2d(x, kw, &b2, 2, 1, tp), seed, tp);
            }, bias));
        } else if (w == "relu") {
            Tensor x = rng_tensor(seed, {4, 4}, Normal{0, 1});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(relu(t, tp), seed, tp);
            }, x));
        } else if (w == "sigmoid") {
            Tensor x = rng_tensor(seed, {4, 4}, Normal{0, 2});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(sigmoid(t, tp), seed, tp);
            }, x));
        } else if (w == "add_broadcast") {
            Tensor x = rng_tensor(seed, {3, 4, 4}, Normal{0, 1});
            Tensor c = rng_tensor(CounterRng::derive(seed, "c"), {3, 1, 1}, Normal{0, 1});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(add(t, c, tp), seed, tp);
            }, x));
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(add(x, t, tp), seed, tp);
            }, c));
        } else if (w == "mul_broadcast") {
            Tensor x = rng_tensor(seed, {3, 4, 4}, Normal{0, 1});
            Tensor c = rng_tensor(CounterRng::derive(seed, "c"), {3, 1, 1}, Normal{0, 1});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(mul(t, c, tp), seed, tp);
            }, x));
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(mul(x, t, tp), seed, tp);
            }, c));
        } else if (w == "reshape_transpose_slice") {
            Tensor x = rng_tensor(seed, {4, 6}, Normal{0, 1});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                Tensor y = transpose2d(reshape(t, {6, 4}, tp), tp);
                return weighted_sum(slice_rows(y, 1, 3, tp), seed, tp);
            }, x));
        } else if (w == "select_stack") {
            Tensor x = rng_tensor(seed, {3, 2, 2}, Normal{0, 1});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                std::vector<Tensor> parts;
                for (int i = 0; i < 3; ++i)
                    parts.push_back(select0(t, 2 - i, tp));
                return weighted_sum(stack0(parts, tp), seed, tp);
            }, x));
        } else if (w == "rowmean_scale") {
            Tensor x = rng_tensor(seed, {5, 7}, Normal{0, 1});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(scale(rowmean(t, tp), 3.5, tp), seed, tp);
            }, x));
        } else if (w == "cross_entropy") {
            Tensor logits = rng_tensor(seed, {4, 5}, Normal{0, 2});
            std::vector<int> labels = {1, 0, 4, 2};
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return cross_entropy(t, labels, tp);
            }, logits));
        }
    }
    return worst;
}

std::vector<BlockSpec> all_block_specs(int channels) {
    std::vector<BlockSpec> specs;
    for (NlVariant v : {NlVariant::gaussian, NlVariant::e_gaussian, NlVariant::dot,
                        NlVariant::concat}) {
        BlockSpec s;
        s.kind = BlockKind::nl;
        s.channels = channels;
        s.variant = v;
        specs.push_back(s);
    }
    {
        BlockSpec s;
        s.kind = BlockKind::snl;
        s.channels = channels;
        s.snl_form = SnlForm::pre_distributive;
        specs.push_back(s);
        s.snl_form = SnlForm::post_distributive;
        specs.push_back(s);
    }
    for (BlockKind k : {BlockKind::gc, BlockKind::se}) {
        BlockSpec s;
        s.kind = k;
        s.channels = channels;
        s.bottleneck_ratio = 4;
        specs.push_back(s);
    }
    {
        BlockSpec s;
        s.kind = BlockKind::framework;
        s.channels = channels;
        s.bottleneck_ratio = 4;
        s.pooling = Pooling::att;
        s.fusion = Fusion::add;
        s.transform = Transform::bottleneck_ln_relu;
        specs.push_back(s);
        s.pooling = Pooling::avg;
        s.fusion = Fusion::scale;
        s.transform = Transform::bottleneck_sigmoid;
        specs.push_back(s);
        s.fusion = Fusion::add;
        s.transform = Transform::single_linear;
        specs.push_back(s);
    }
    return specs;
}

std::string block_label(const BlockSpec& s) {
    std::string name = to_string(s.kind);
    if (s.kind == BlockKind::nl) name += std::string("-") + to_string(s.variant);
    if (s.kind == BlockKind::snl) name += std::string("-") + to_string(s.snl_form);
    if (s.kind == BlockKind::framework)
        name += std::string("-") + to_string(s.pooling) + "-" + to_string(s.fusion);
    return name;
}

// gc blocks are zero-initialized; randomize the second bottleneck weight so
// the whole path carries gradient
void unfreeze_gc(BlockParams& bp) {
    if (bp.spec.kind == BlockKind::gc && bp.has("w_v2"))
        bp.find("w_v2") =
            rng_tensor(CounterRng::derive(7771, "unfreeze"), bp.find("w_v2").shape(),
                       Kaiming{bp.find("w_v2").dim(0)});
}

}  // namespace

std::vector<CheckResult> gradient_suite(int nseeds) {
    std::vector<CheckResult> results;
    for (const char* op : {"matmul", "softmax", "layer_norm", "conv2d", "relu", "sigmoid",
                           "add_broadcast", "mul_broadcast", "reshape_transpose_slice",
                           "select_stack", "rowmean_scale", "cross_entropy"}) {
        results.push_back({std::string("op/") + op, op_suite_worst(op, nseeds), 1e-5});
    }
    for (const BlockSpec& spec : all_block_specs(8)) {
        double worst = 0.0;
        for (int s = 0; s < nseeds; ++s) {
            uint64_t seed = uint64_t(s);
            BlockParams bp = build_block(spec, CounterRng::derive(seed, "params"));
            unfreeze_gc(bp);
            Tensor x = rng_tensor(CounterRng::derive(seed, "input"), {1, 8, 6, 6},
                                  Normal{0.0, 1.0});
            worst = std::max(worst, grad_check([&](const Tensor& t, Tape* tp) {
                return weighted_sum(block_forward(bp, t, tp), seed, tp);
            }, x));
        }
        results.push_back({std::string("block/") + block_label(spec), worst, 1e-5});
    }
    return results;
}

CheckResult snl_distributive_check(int trials, uint64_t seed0) {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        uint64_t seed = seed0 + uint64_t(t);
        int c = 4 + int(CounterRng::word(seed, 100) % 29);       // 4..32
        int h = 2 + int(CounterRng::word(seed, 101) % 7);        // 2..8
        int w = 2 + int(CounterRng::word(seed, 102) % 7);
        BlockSpec spec;
        spec.kind = BlockKind::snl;
        spec.channels = c;
        BlockParams bp = build_block(spec, CounterRng::derive(seed, "params"));
        Tensor x = rng_tensor(CounterRng::derive(seed, "x"), {1, c, h, w}, Normal{0, 1});
        Tensor pre = snl_forward(bp, x, SnlForm::pre_distributive);
        Tensor post = snl_forward(bp, x, SnlForm::post_distributive);
        worst = std::max(worst, pre.max_abs_diff(post));
    }
    return {"equiv/snl-distributive", worst, 1e-10};
}

CheckResult framework_gc_check(int nseeds) {
    double worst = 0.0;
    for (int s = 0; s < nseeds; ++s) {
        uint64_t seed = uint64_t(s);
        BlockSpec spec;
        spec.kind = BlockKind::framework;
        spec.channels = 16;
        spec.bottleneck_ratio = 4;
        spec.pooling = Pooling::att;
        spec.fusion = Fusion::add;
        spec.transform = Transform::bottleneck_ln_relu;
        BlockParams bp = build_block(spec, CounterRng::derive(seed, "p"));
        Tensor x = rng_tensor(CounterRng::derive(seed, "x"), {1, 16, 5, 4}, Normal{0, 1});
        worst = std::max(worst, framework_forward(bp, x).max_abs_diff(gc_forward(bp, x)));
    }
    return {"equiv/framework-gc", worst, 1e-12};
}

CheckResult framework_se_check(int nseeds) {
    double worst = 0.0;
    for (int s = 0; s < nseeds; ++s) {
        uint64_t seed = uint64_t(s);
        BlockSpec spec;
        spec.kind = BlockKind::framework;
        spec.channels = 16;
        spec.bottleneck_ratio = 4;
        spec.pooling = Pooling::avg;
        spec.fusion = Fusion::scale;
        spec.transform = Transform::bottleneck_sigmoid;
        BlockParams bp = build_block(spec, CounterRng::derive(seed, "p"));
        Tensor x = rng_tensor(CounterRng::derive(seed, "x"), {1, 16, 5, 4}, Normal{0, 1});
        worst = std::max(worst, framework_forward(bp, x).max_abs_diff(se_forward(bp, x)));
    }
    return {"equiv/framework-se", worst, 1e-12};
}

CheckResult permutation_equivariance_check(int nperms, int nseeds) {
    double worst = 0.0;
    const int h = 4, w = 4, hw = h * w, c = 8;
    for (int s = 0; s < nseeds; ++s) {
        uint64_t seed = uint64_t(s);
        Tensor x = rng_tensor(CounterRng::derive(seed, "x"), {1, c, h, w}, Normal{0, 1});
        for (const BlockSpec& spec : all_block_specs(c)) {
            BlockParams bp = build_block(spec, CounterRng::derive(seed, "p"));
            unfreeze_gc(bp);
            Tensor fx = block_forward(bp, x);
            for (int p = 0; p < nperms; ++p) {
                std::vector<int> perm(hw);
                for (int i = 0; i < hw; ++i) perm[size_t(i)] = i;
                CounterRng rng(CounterRng::derive(seed * 1000 + uint64_t(p), "perm"));
                for (int i = hw - 1; i > 0; --i)
                    std::swap(perm[size_t(i)], perm[rng.next_index(uint64_t(i + 1))]);

                auto apply = [&](const Tensor& t) {
                    Tensor y(t.shape());
                    for (int ch = 0; ch < c; ++ch)
                        for (int i = 0; i < hw; ++i)
                            y.raw()[ch * hw + i] = t.data()[ch * hw + perm[size_t(i)]];
                    return y;
                };
                worst = std::max(worst, block_forward(bp, apply(x)).max_abs_diff(apply(fx)));
            }
        }
    }
    return {"equiv/permutation", worst, 1e-10};
}

}  // namespace gctx
