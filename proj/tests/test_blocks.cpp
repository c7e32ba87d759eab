#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gctx/blocks.hpp"
#include "gctx/ops.hpp"
#include "gctx/rng.hpp"

using namespace gctx;

namespace {

BlockSpec make_spec(BlockKind kind, int channels) {
    BlockSpec s;
    s.kind = kind;
    s.channels = channels;
    if (kind == BlockKind::gc || kind == BlockKind::se || kind == BlockKind::framework)
        s.bottleneck_ratio = 4;
    return s;
}

Tensor random_input(uint64_t seed, int c, int h, int w) {
    return rng_tensor(CounterRng::derive(seed, "x"), {1, c, h, w}, Normal{0.0, 1.0});
}

// every channel constant across positions
Tensor constant_position_input(int c, int h, int w) {
    Tensor x({1, c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < h * w; ++i) x.raw()[ch * h * w + i] = 0.3 * ch - 1.0;
    return x;
}

Tensor permute_positions(const Tensor& x, const std::vector<int>& perm) {
    int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor y(x.shape());
    for (int s = 0; s < n; ++s)
        for (int ch = 0; ch < c; ++ch)
            for (int p = 0; p < hw; ++p)
                y.raw()[(int64_t(s) * c + ch) * hw + p] =
                    x.data()[(int64_t(s) * c + ch) * hw + perm[size_t(p)]];
    return y;
}

}  // namespace

TEST_CASE("build_block: boundary ratio, divisibility error, determinism") {
    BlockSpec gc16 = make_spec(BlockKind::gc, 16);
    gc16.bottleneck_ratio = 16;  // C/r = 1
    BlockParams bp = build_block(gc16, 0);
    CHECK(bp.find("w_k").shape() == Shape{16, 1});
    CHECK(bp.find("w_v1").shape() == Shape{16, 1});
    CHECK(bp.find("w_v2").shape() == Shape{1, 16});

    BlockSpec bad = make_spec(BlockKind::gc, 8);
    bad.bottleneck_ratio = 16;
    CHECK_THROWS_AS(build_block(bad, 0), ConfigError);

    BlockSpec nl = make_spec(BlockKind::nl, 6);
    nl.hidden_ratio = 4;
    CHECK_THROWS_AS(build_block(nl, 0), ConfigError);

    BlockSpec se = make_spec(BlockKind::se, 8);
    BlockParams a = build_block(se, 42), b = build_block(se, 42);
    REQUIRE(a.params.size() == b.params.size());
    for (size_t i = 0; i < a.params.size(); ++i)
        CHECK(a.params[i].second.same_bits(b.params[i].second));
}

TEST_CASE("nl e-gaussian: constant positions give uniform attention rows") {
    BlockSpec spec = make_spec(BlockKind::nl, 4);
    BlockParams bp = build_block(spec, 1);
    Tensor x = constant_position_input(4, 3, 2);
    ProbeTrace trace;
    nl_forward(bp, x, nullptr, &trace);
    REQUIRE(trace.att.has_value());
    const auto& att = *trace.att;
    CHECK_FALSE(att.global);
    for (int i = 0; i < att.np; ++i)
        for (int j = 0; j < att.np; ++j)
            CHECK(std::fabs(att.row(i)[j] - 1.0 / att.np) < 1e-12);
}

TEST_CASE("nl e-gaussian: two basis positions give the analytic softmax row") {
    BlockSpec spec = make_spec(BlockKind::nl, 2);
    spec.hidden_ratio = 1;  // identity-sized embeddings
    BlockParams bp = build_block(spec, 0);
    bp.find("w_q") = Tensor({2, 2}, {1, 0, 0, 1});
    bp.find("w_k") = Tensor({2, 2}, {1, 0, 0, 1});
    // positions: e1 at (0,0), e2 at (0,1); layout [N,C,H,W]
    Tensor x({1, 2, 1, 2}, {1, 0, 0, 1});
    ProbeTrace trace;
    nl_forward(bp, x, nullptr, &trace);
    const auto& att = *trace.att;
    double e = std::exp(1.0);
    CHECK(att.row(0)[0] == doctest::Approx(e / (e + 1)).epsilon(1e-12));   // 0.7311
    CHECK(att.row(0)[1] == doctest::Approx(1.0 / (e + 1)).epsilon(1e-12)); // 0.2689
}

TEST_CASE("nl: zero w_z makes the block the residual identity") {
    for (NlVariant v : {NlVariant::gaussian, NlVariant::e_gaussian, NlVariant::dot,
                        NlVariant::concat}) {
        BlockSpec spec = make_spec(BlockKind::nl, 4);
        spec.variant = v;
        BlockParams bp = build_block(spec, 5);
        bp.find("w_z") = Tensor({2, 4});
        Tensor x = random_input(7, 4, 3, 3);
        CHECK(nl_forward(bp, x).same_values(x));
    }
}

TEST_CASE("nl attention normalization per variant") {
    for (NlVariant v : {NlVariant::gaussian, NlVariant::e_gaussian}) {
        BlockSpec spec = make_spec(BlockKind::nl, 4);
        spec.variant = v;
        BlockParams bp = build_block(spec, 3);
        Tensor x = random_input(9, 4, 3, 3);
        ProbeTrace trace;
        nl_forward(bp, x, nullptr, &trace);
        for (int i = 0; i < trace.att->np; ++i) {
            double s = 0;
            for (int j = 0; j < trace.att->np; ++j) s += trace.att->row(i)[j];
            CHECK(std::fabs(s - 1.0) < 1e-12);
        }
    }
    // dot rows: 1/Np of raw scores, sum unconstrained
    BlockSpec dot = make_spec(BlockKind::nl, 4);
    dot.variant = NlVariant::dot;
    BlockParams bp = build_block(dot, 3);
    Tensor x = random_input(9, 4, 3, 3);
    ProbeTrace trace;
    nl_forward(bp, x, nullptr, &trace);
    int np = trace.att->np;
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j)
            CHECK(trace.att->row(i)[j] ==
                  doctest::Approx(trace.prod->at({i, j}) / np).epsilon(1e-14));

    // concat rows: nonnegative after the ReLU, 1/Np scaled
    BlockSpec cat = make_spec(BlockKind::nl, 4);
    cat.variant = NlVariant::concat;
    BlockParams bpc = build_block(cat, 4);
    ProbeTrace tc;
    nl_forward(bpc, x, nullptr, &tc);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j) CHECK(tc.att->row(i)[j] >= 0.0);
}

TEST_CASE("snl: zero logits give the uniform-attention mean context") {
    BlockSpec spec = make_spec(BlockKind::snl, 3);
    BlockParams bp = build_block(spec, 11);
    bp.find("w_k") = Tensor({3, 1});
    Tensor x = random_input(13, 3, 2, 2);
    Tensor z = snl_forward(bp, x, SnlForm::post_distributive);

    const Tensor& wv = bp.find("w_v");
    int np = 4, c = 3;
    for (int ch = 0; ch < c; ++ch) {
        double mean = 0;
        for (int p = 0; p < np; ++p) mean += x.data()[ch * np + p];
        mean /= np;
        for (int p = 0; p < np; ++p) {
            double ctx = 0;
            for (int cf = 0; cf < c; ++cf) {
                double mf = 0;
                for (int q = 0; q < np; ++q) mf += x.data()[cf * np + q];
                mf /= np;
                ctx += mf * wv.at({cf, ch});
            }
            CHECK(z.data()[ch * np + p] ==
                  doctest::Approx(x.data()[ch * np + p] + ctx).epsilon(1e-12));
        }
    }
}

TEST_CASE("snl: pre and post distributive forms agree within 1e-10") {
    BlockSpec spec = make_spec(BlockKind::snl, 8);
    BlockParams bp = build_block(spec, 0);
    Tensor x = random_input(0, 8, 4, 4);
    Tensor pre = snl_forward(bp, x, SnlForm::pre_distributive);
    Tensor post = snl_forward(bp, x, SnlForm::post_distributive);
    CHECK(pre.max_abs_diff(post) < 1e-10);
}

TEST_CASE("snl: single position reduces to z = x + W_v x") {
    BlockSpec spec = make_spec(BlockKind::snl, 5);
    BlockParams bp = build_block(spec, 21);
    Tensor x = random_input(22, 5, 1, 1);
    ProbeTrace trace;
    Tensor z = snl_forward(bp, x, SnlForm::post_distributive, nullptr, &trace);
    CHECK(trace.att->weights[0] == 1.0);  // softmax of one element
    const Tensor& wv = bp.find("w_v");
    for (int ch = 0; ch < 5; ++ch) {
        double ctx = 0;
        for (int cf = 0; cf < 5; ++cf) ctx += x.data()[cf] * wv.at({cf, ch});
        CHECK(z.data()[ch] == doctest::Approx(x.data()[ch] + ctx).epsilon(1e-12));
    }
}

TEST_CASE("gc: freshly built block is the exact identity") {
    BlockSpec spec = make_spec(BlockKind::gc, 8);
    BlockParams bp = build_block(spec, 33);
    Tensor x = random_input(34, 8, 5, 3);
    Tensor z = gc_forward(bp, x);
    CHECK(z.same_values(x));
}

TEST_CASE("gc: constant-position input stays constant across positions") {
    BlockSpec spec = make_spec(BlockKind::gc, 8);
    BlockParams bp = build_block(spec, 35);
    bp.find("w_v2") = rng_tensor(99, {2, 8}, Kaiming{2});
    Tensor x = constant_position_input(8, 3, 3);
    Tensor z = gc_forward(bp, x);
    for (int ch = 0; ch < 8; ++ch)
        for (int p = 1; p < 9; ++p) CHECK(z.data()[ch * 9 + p] == z.data()[ch * 9]);
}

TEST_CASE("gc: gradient check on sum of outputs") {
    BlockSpec spec = make_spec(BlockKind::gc, 6);
    spec.bottleneck_ratio = 2;
    BlockParams bp = build_block(spec, 36);
    bp.find("w_v2") = rng_tensor(100, {3, 6}, Kaiming{3});  // nonzero so the branch matters
    Tensor x = random_input(37, 6, 3, 2);
    double err = grad_check(
        [&](const Tensor& t, Tape* tape) { return sum_all(gc_forward(bp, t, tape), tape); }, x);
    CHECK(err < 1e-5);

    // and through every parameter; b_k shifts all attention logits equally,
    // so its true gradient is zero and only the tape value is checked
    for (auto& [name, tensor] : bp.params) {
        if (name == "b_k") {
            Tape tape;
            BlockParams local = bp;
            tape.watch(local.find("b_k"));
            Tensor loss = sum_all(gc_forward(local, x, &tape), &tape);
            tape.backward(loss);
            CHECK(std::fabs(tape.grad(local.find("b_k")).item()) < 1e-10);
            continue;
        }
        Tensor saved = tensor;
        double perr = grad_check(
            [&, n = name](const Tensor& t, Tape* tape) {
                BlockParams local = bp;
                local.find(n) = t;
                if (tape) tape->watch(local.find(n));
                return sum_all(gc_forward(local, x, tape), tape);
            },
            saved);
        CHECK_MESSAGE(perr < 1e-5, "param ", name);
    }
}

TEST_CASE("se: zero excitation weights gate everything by one half") {
    BlockSpec spec = make_spec(BlockKind::se, 4);
    BlockParams bp = build_block(spec, 41);
    bp.find("w_2") = Tensor({1, 4});
    Tensor x = random_input(42, 4, 3, 3);
    Tensor z = se_forward(bp, x);
    for (int64_t i = 0; i < x.size(); ++i) CHECK(z.data()[i] == x.data()[i] * 0.5);
}

TEST_CASE("se: zero input stays zero under multiplicative fusion") {
    BlockSpec spec = make_spec(BlockKind::se, 4);
    BlockParams bp = build_block(spec, 43);
    Tensor z = se_forward(bp, Tensor({1, 4, 3, 3}));
    for (int64_t i = 0; i < z.size(); ++i) CHECK(z.data()[i] == 0.0);
}

TEST_CASE("framework: avg pooling is the arithmetic position mean") {
    BlockSpec spec = make_spec(BlockKind::framework, 4);
    spec.pooling = Pooling::avg;
    spec.fusion = Fusion::add;
    spec.transform = Transform::none;
    BlockParams bp = build_block(spec, 51);
    Tensor x = random_input(52, 4, 2, 3);
    Tensor z = framework_forward(bp, x);
    for (int ch = 0; ch < 4; ++ch) {
        double mean = 0;
        for (int p = 0; p < 6; ++p) mean += x.data()[ch * 6 + p];
        mean /= 6;
        for (int p = 0; p < 6; ++p)
            CHECK(z.data()[ch * 6 + p] ==
                  doctest::Approx(x.data()[ch * 6 + p] + mean).epsilon(1e-13));
    }
}

TEST_CASE("framework subsumption: att+add+bottleneck_ln_relu equals gc") {
    BlockSpec spec = make_spec(BlockKind::framework, 8);
    spec.pooling = Pooling::att;
    spec.fusion = Fusion::add;
    spec.transform = Transform::bottleneck_ln_relu;
    BlockParams bp = build_block(spec, 61);
    Tensor x = random_input(62, 8, 4, 3);
    Tensor via_framework = framework_forward(bp, x);
    Tensor direct = gc_forward(bp, x);
    CHECK(via_framework.max_abs_diff(direct) < 1e-12);
}

TEST_CASE("framework subsumption: avg+scale+bottleneck_sigmoid equals se") {
    BlockSpec spec = make_spec(BlockKind::framework, 8);
    spec.pooling = Pooling::avg;
    spec.fusion = Fusion::scale;
    spec.transform = Transform::bottleneck_sigmoid;
    BlockParams bp = build_block(spec, 63);
    Tensor x = random_input(64, 8, 4, 3);
    Tensor via_framework = framework_forward(bp, x);
    Tensor direct = se_forward(bp, x);
    CHECK(via_framework.max_abs_diff(direct) < 1e-12);
}

TEST_CASE("framework: scale fusion demands a bounded transform") {
    BlockSpec spec = make_spec(BlockKind::framework, 8);
    spec.pooling = Pooling::att;
    spec.fusion = Fusion::scale;
    spec.transform = Transform::bottleneck_ln_relu;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.transform = Transform::single_linear;
    CHECK_THROWS_AS(build_block(spec, 0), ConfigError);
}

TEST_CASE("attention_map: global blocks replicate their single map") {
    BlockSpec spec = make_spec(BlockKind::snl, 4);
    BlockParams bp = build_block(spec, 71);
    Tensor x = random_input(72, 4, 3, 3);
    AttentionMap m = attention_map(bp, x);
    CHECK(m.global);
    Tensor rows = m.per_query_matrix();
    for (int i = 1; i < m.np; ++i)
        for (int j = 0; j < m.np; ++j) CHECK(rows.at({i, j}) == rows.at({0, j}));

    // per-query map from nl on random input: rows differ
    BlockSpec nl = make_spec(BlockKind::nl, 4);
    BlockParams bpn = build_block(nl, 73);
    AttentionMap mn = attention_map(bpn, x);
    CHECK_FALSE(mn.global);
    bool any_differ = false;
    for (int j = 0; j < mn.np; ++j)
        if (mn.row(0)[j] != mn.row(1)[j]) any_differ = true;
    CHECK(any_differ);
}

TEST_CASE("permutation equivariance across all block kinds") {
    std::vector<BlockSpec> specs;
    for (NlVariant v : {NlVariant::gaussian, NlVariant::e_gaussian, NlVariant::dot,
                        NlVariant::concat}) {
        BlockSpec s = make_spec(BlockKind::nl, 4);
        s.variant = v;
        specs.push_back(s);
    }
    specs.push_back(make_spec(BlockKind::snl, 4));
    specs.push_back(make_spec(BlockKind::gc, 4));
    specs.push_back(make_spec(BlockKind::se, 4));

    Tensor x = random_input(81, 4, 3, 3);
    std::vector<int> perm = {5, 2, 7, 0, 8, 1, 6, 3, 4};
    for (const auto& spec : specs) {
        BlockParams bp = build_block(spec, 82);
        if (bp.has("w_v2") && spec.kind == BlockKind::gc)
            bp.find("w_v2") = rng_tensor(83, bp.find("w_v2").shape(), Kaiming{1});
        Tensor lhs = block_forward(bp, permute_positions(x, perm));
        Tensor rhs = permute_positions(block_forward(bp, x), perm);
        CHECK_MESSAGE(lhs.max_abs_diff(rhs) < 1e-10, "kind ", to_string(spec.kind));
    }
}

TEST_CASE("block spec json: round trip and strict keys") {
    BlockSpec nl = make_spec(BlockKind::nl, 16);
    nl.variant = NlVariant::dot;
    nl.hidden_ratio = 4;
    BlockSpec back = BlockSpec::from_json(nl.to_json());
    CHECK(back.kind == BlockKind::nl);
    CHECK(back.variant == NlVariant::dot);
    CHECK(back.channels == 16);
    CHECK(back.hidden_ratio == 4);

    BlockSpec fw = make_spec(BlockKind::framework, 32);
    fw.pooling = Pooling::avg;
    fw.fusion = Fusion::scale;
    fw.transform = Transform::bottleneck_sigmoid;
    BlockSpec back2 = BlockSpec::from_json(fw.to_json());
    CHECK(back2.pooling == Pooling::avg);
    CHECK(back2.fusion == Fusion::scale);

    nlohmann::json j = nl.to_json();
    j["frobnicate"] = 1;
    CHECK_THROWS_AS(BlockSpec::from_json(j), ConfigError);
    nlohmann::json missing;
    missing["channels"] = 8;
    CHECK_THROWS_AS(BlockSpec::from_json(missing), ConfigError);
}

TEST_CASE("batched input: per-sample forwards are independent") {
    BlockSpec spec = make_spec(BlockKind::gc, 4);
    BlockParams bp = build_block(spec, 91);
    bp.find("w_v2") = rng_tensor(92, {1, 4}, Kaiming{1});
    Tensor x = rng_tensor(93, {3, 4, 2, 2}, Normal{0, 1});
    Tensor z = gc_forward(bp, x);
    for (int s = 0; s < 3; ++s) {
        Tensor xs({1, 4, 2, 2}, std::vector<double>(x.data() + s * 16, x.data() + (s + 1) * 16));
        Tensor zs = gc_forward(bp, xs);
        for (int i = 0; i < 16; ++i) CHECK(zs.data()[i] == z.data()[s * 16 + i]);
    }
}
