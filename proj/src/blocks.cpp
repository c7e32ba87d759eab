#include "gctx/blocks.hpp"

#include <cmath>

#include "gctx/rng.hpp"

namespace gctx {

const char* to_string(BlockKind k) {
    switch (k) {
        case BlockKind::nl: return "nl";
        case BlockKind::snl: return "snl";
        case BlockKind::gc: return "gc";
        case BlockKind::se: return "se";
        case BlockKind::framework: return "framework";
    }
    return "?";
}

const char* to_string(NlVariant v) {
    switch (v) {
        case NlVariant::gaussian: return "gaussian";
        case NlVariant::e_gaussian: return "e-gaussian";
        case NlVariant::dot: return "dot";
        case NlVariant::concat: return "concat";
    }
    return "?";
}

const char* to_string(Pooling p) { return p == Pooling::att ? "att" : "avg"; }
const char* to_string(Fusion f) { return f == Fusion::add ? "add" : "scale"; }

const char* to_string(Transform t) {
    switch (t) {
        case Transform::bottleneck_ln_relu: return "bottleneck_ln_relu";
        case Transform::bottleneck_sigmoid: return "bottleneck_sigmoid";
        case Transform::single_linear: return "single_linear";
        case Transform::none: return "none";
    }
    return "?";
}

const char* to_string(SnlForm f) {
    return f == SnlForm::pre_distributive ? "pre_distributive" : "post_distributive";
}

bool BlockSpec::has_bottleneck() const {
    if (kind == BlockKind::gc || kind == BlockKind::se) return true;
    if (kind == BlockKind::framework)
        return transform == Transform::bottleneck_ln_relu ||
               transform == Transform::bottleneck_sigmoid;
    return false;
}

int BlockSpec::hidden_dim() const {
    if (kind == BlockKind::nl) return channels / hidden_ratio;
    return channels / bottleneck_ratio;
}

void BlockSpec::validate() const {
    if (channels <= 0) throw ConfigError("block channels must be positive");
    if (kind == BlockKind::nl) {
        if (hidden_ratio <= 0) throw ConfigError("nl hidden_ratio must be positive");
        if (channels % hidden_ratio != 0)
            throw ConfigError("nl channels " + std::to_string(channels) +
                              " not divisible by hidden_ratio " + std::to_string(hidden_ratio));
    }
    if (has_bottleneck()) {
        if (bottleneck_ratio <= 0) throw ConfigError("bottleneck_ratio must be positive");
        if (channels % bottleneck_ratio != 0 || channels / bottleneck_ratio < 1)
            throw ConfigError("channels " + std::to_string(channels) +
                              " incompatible with bottleneck_ratio " +
                              std::to_string(bottleneck_ratio));
    }
    if (kind == BlockKind::framework && fusion == Fusion::scale &&
        transform != Transform::bottleneck_sigmoid)
        throw ConfigError("scale fusion requires a sigmoid-terminated transform");
}

nlohmann::json BlockSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["channels"] = channels;
    switch (kind) {
        case BlockKind::nl:
            j["variant"] = to_string(variant);
            j["hidden_ratio"] = hidden_ratio;
            break;
        case BlockKind::snl:
            j["snl_form"] = to_string(snl_form);
            break;
        case BlockKind::gc:
        case BlockKind::se:
            j["bottleneck_ratio"] = bottleneck_ratio;
            break;
        case BlockKind::framework:
            j["bottleneck_ratio"] = bottleneck_ratio;
            j["pooling"] = to_string(pooling);
            j["fusion"] = to_string(fusion);
            j["transform"] = to_string(transform);
            break;
    }
    return j;
}

namespace {

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table,
             const char* what) {
    for (auto& [name, val] : table)
        if (s == name) return val;
    throw ConfigError(std::string("unknown ") + what + ": " + s);
}

}  // namespace

BlockSpec BlockSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("block spec must be a JSON object");
    static const std::vector<std::string> known = {
        "kind",    "variant", "channels",  "hidden_ratio", "bottleneck_ratio",
        "pooling", "fusion",  "transform", "snl_form"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError("unknown block spec key: " + it.key());
    }
    BlockSpec s;
    if (!j.contains("kind")) throw ConfigError("block spec missing `kind`");
    s.kind = parse_enum<BlockKind>(j.at("kind").get<std::string>(),
                                   {{"nl", BlockKind::nl},
                                    {"snl", BlockKind::snl},
                                    {"gc", BlockKind::gc},
                                    {"se", BlockKind::se},
                                    {"framework", BlockKind::framework}},
                                   "block kind");
    if (!j.contains("channels")) throw ConfigError("block spec missing `channels`");
    s.channels = j.at("channels").get<int>();
    if (j.contains("variant"))
        s.variant = parse_enum<NlVariant>(j.at("variant").get<std::string>(),
                                          {{"gaussian", NlVariant::gaussian},
                                           {"e-gaussian", NlVariant::e_gaussian},
                                           {"dot", NlVariant::dot},
                                           {"concat", NlVariant::concat}},
                                          "nl variant");
    if (j.contains("hidden_ratio")) s.hidden_ratio = j.at("hidden_ratio").get<int>();
    if (j.contains("bottleneck_ratio")) s.bottleneck_ratio = j.at("bottleneck_ratio").get<int>();
    if (j.contains("pooling"))
        s.pooling = parse_enum<Pooling>(j.at("pooling").get<std::string>(),
                                        {{"att", Pooling::att}, {"avg", Pooling::avg}}, "pooling");
    if (j.contains("fusion"))
        s.fusion = parse_enum<Fusion>(j.at("fusion").get<std::string>(),
                                      {{"add", Fusion::add}, {"scale", Fusion::scale}}, "fusion");
    if (j.contains("transform"))
        s.transform = parse_enum<Transform>(j.at("transform").get<std::string>(),
                                            {{"bottleneck_ln_relu", Transform::bottleneck_ln_relu},
                                             {"bottleneck_sigmoid", Transform::bottleneck_sigmoid},
                                             {"single_linear", Transform::single_linear},
                                             {"none", Transform::none}},
                                            "transform");
    if (j.contains("snl_form"))
        s.snl_form = parse_enum<SnlForm>(j.at("snl_form").get<std::string>(),
                                         {{"pre_distributive", SnlForm::pre_distributive},
                                          {"post_distributive", SnlForm::post_distributive}},
                                         "snl form");
    s.validate();
    return s;
}

Tensor& BlockParams::find(const std::string& name) {
    for (auto& [n, t] : params)
        if (n == name) return t;
    throw ContractError("block has no parameter `" + name + "`");
}

const Tensor& BlockParams::find(const std::string& name) const {
    for (auto& [n, t] : params)
        if (n == name) return t;
    throw ContractError("block has no parameter `" + name + "`");
}

bool BlockParams::has(const std::string& name) const {
    for (auto& [n, t] : params)
        if (n == name) return true;
    return false;
}

int64_t BlockParams::param_count() const {
    int64_t n = 0;
    for (auto& [name, t] : params) n += t.size();
    return n;
}

void BlockParams::watch_all(Tape& tape) {
    for (auto& [name, t] : params) tape.watch(t);
}

Tensor AttentionMap::per_query_matrix() const {
    Tensor m({np, np});
    double* q = m.raw();
    if (global) {
        for (int i = 0; i < np; ++i)
            for (int j = 0; j < np; ++j) q[int64_t(i) * np + j] = weights[size_t(j)];
    } else {
        std::copy(weights.begin(), weights.end(), q);
    }
    return m;
}

namespace {

Tensor kaiming_mat(uint64_t seed, const char* name, int in, int out) {
    return rng_tensor(CounterRng::derive(seed, name), {in, out}, Kaiming{in});
}

void push(BlockParams& bp, const char* name, Tensor t) {
    bp.params.emplace_back(name, std::move(t));
}

}  // namespace

BlockParams build_block(const BlockSpec& spec, uint64_t seed) {
    spec.validate();
    BlockParams bp;
    bp.spec = spec;
    int c = spec.channels;
    switch (spec.kind) {
        case BlockKind::nl: {
            int ch = spec.hidden_dim();
            if (spec.variant == NlVariant::e_gaussian || spec.variant == NlVariant::dot) {
                push(bp, "w_q", kaiming_mat(seed, "w_q", c, ch));
                push(bp, "b_q", Tensor({1, ch}));
                push(bp, "w_k", kaiming_mat(seed, "w_k", c, ch));
                push(bp, "b_k", Tensor({1, ch}));
            } else if (spec.variant == NlVariant::concat) {
                push(bp, "w_q", kaiming_mat(seed, "w_q", 2 * c, 1));
                push(bp, "b_q", Tensor({1, 1}));
            }
            push(bp, "w_v", kaiming_mat(seed, "w_v", c, ch));
            push(bp, "b_v", Tensor({1, ch}));
            push(bp, "w_z", kaiming_mat(seed, "w_z", ch, c));
            push(bp, "b_z", Tensor({1, c}));
            break;
        }
        case BlockKind::snl: {
            push(bp, "w_k", kaiming_mat(seed, "w_k", c, 1));
            push(bp, "b_k", Tensor({1, 1}));
            push(bp, "w_v", kaiming_mat(seed, "w_v", c, c));
            push(bp, "b_v", Tensor({1, c}));
            break;
        }
        case BlockKind::gc: {
            int cr = spec.hidden_dim();
            push(bp, "w_k", kaiming_mat(seed, "w_k", c, 1));
            push(bp, "b_k", Tensor({1, 1}));
            push(bp, "w_v1", kaiming_mat(seed, "w_v1", c, cr));
            push(bp, "b_v1", Tensor({1, cr}));
            push(bp, "ln_gamma", Tensor::full({cr}, 1.0));
            push(bp, "ln_beta", Tensor({cr}));
            push(bp, "w_v2", Tensor({cr, c}));  // zero: identity at insertion
            push(bp, "b_v2", Tensor({1, c}));
            break;
        }
        case BlockKind::se: {
            int cr = spec.hidden_dim();
            push(bp, "w_1", kaiming_mat(seed, "w_1", c, cr));
            push(bp, "b_1", Tensor({1, cr}));
            push(bp, "w_2", kaiming_mat(seed, "w_2", cr, c));
            push(bp, "b_2", Tensor({1, c}));
            break;
        }
        case BlockKind::framework: {
            if (spec.pooling == Pooling::att) {
                push(bp, "w_k", kaiming_mat(seed, "w_k", c, 1));
                push(bp, "b_k", Tensor({1, 1}));
            }
            switch (spec.transform) {
                case Transform::bottleneck_ln_relu: {
                    int cr = spec.hidden_dim();
                    push(bp, "w_v1", kaiming_mat(seed, "w_v1", c, cr));
                    push(bp, "b_v1", Tensor({1, cr}));
                    push(bp, "ln_gamma", Tensor::full({cr}, 1.0));
                    push(bp, "ln_beta", Tensor({cr}));
                    push(bp, "w_v2", kaiming_mat(seed, "w_v2", cr, c));
                    push(bp, "b_v2", Tensor({1, c}));
                    break;
                }
                case Transform::bottleneck_sigmoid: {
                    int cr = spec.hidden_dim();
                    push(bp, "w_1", kaiming_mat(seed, "w_1", c, cr));
                    push(bp, "b_1", Tensor({1, cr}));
                    push(bp, "w_2", kaiming_mat(seed, "w_2", cr, c));
                    push(bp, "b_2", Tensor({1, c}));
                    break;
                }
                case Transform::single_linear:
                    push(bp, "w_v", kaiming_mat(seed, "w_v", c, c));
                    push(bp, "b_v", Tensor({1, c}));
                    break;
                case Transform::none:
                    break;
            }
            break;
        }
    }
    return bp;
}

namespace {

struct SampleView {
    Tensor pos_mat;   // P [C, Np]
    Tensor features;  // X [Np, C]
};

SampleView sample_view(const Tensor& x, int n, int c, int np, Tape* tape) {
    SampleView v;
    v.pos_mat = reshape(select0(x, n, tape), {c, np}, tape);
    v.features = transpose2d(v.pos_mat, tape);
    return v;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b, Tape* tape) {
    return add(matmul(x, w, tape), b, tape);
}

void check_input(const BlockSpec& spec, const Tensor& x) {
    if (x.rank() != 4) throw ShapeError("block input must be [N,C,H,W], got " + shape_str(x.shape()));
    if (x.dim(1) != spec.channels)
        throw ShapeError("block built for C=" + std::to_string(spec.channels) + " applied to C=" +
                         std::to_string(x.dim(1)));
}

// rows of z - x for the fused sample: zp and P are [C, Np]
Tensor residual_removed(const Tensor& zp, const Tensor& p, int c, int np) {
    Tensor out({np, c});
    const double* a = zp.data();
    const double* b = p.data();
    double* q = out.raw();
    for (int i = 0; i < np; ++i)
        for (int ch = 0; ch < c; ++ch)
            q[int64_t(i) * c + ch] = a[int64_t(ch) * np + i] - b[int64_t(ch) * np + i];
    return out;
}

AttentionMap global_alpha_map(const Tensor& alpha, int np) {
    AttentionMap m;
    m.np = np;
    m.global = true;
    m.weights.assign(alpha.data(), alpha.data() + np);
    return m;
}

AttentionMap uniform_alpha_map(int np) {
    AttentionMap m;
    m.np = np;
    m.global = true;
    m.weights.assign(size_t(np), 1.0 / np);
    return m;
}

}  // namespace

Tensor nl_forward(const BlockParams& bp, const Tensor& x, Tape* tape, ProbeTrace* trace) {
    const BlockSpec& spec = bp.spec;
    if (spec.kind != BlockKind::nl) throw ConfigError("nl_forward on a non-nl block");
    check_input(spec, x);
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int np = h * w;

    std::vector<Tensor> outs;
    outs.reserve(size_t(n));
    for (int s = 0; s < n; ++s) {
        auto view = sample_view(x, s, c, np, tape);
        const Tensor& X = view.features;

        Tensor scores_pre;  // pre-normalization pairwise scores
        Tensor att;
        Tensor q_emb, k_emb;
        switch (spec.variant) {
            case NlVariant::gaussian:
                scores_pre = matmul(X, view.pos_mat, tape);  // <x_i, x_j>
                att = softmax(scores_pre, 1, tape);
                break;
            case NlVariant::e_gaussian:
                q_emb = linear(X, bp.find("w_q"), bp.find("b_q"), tape);
                k_emb = linear(X, bp.find("w_k"), bp.find("b_k"), tape);
                scores_pre = matmul(q_emb, transpose2d(k_emb, tape), tape);
                att = softmax(scores_pre, 1, tape);
                break;
            case NlVariant::dot:
                q_emb = linear(X, bp.find("w_q"), bp.find("b_q"), tape);
                k_emb = linear(X, bp.find("w_k"), bp.find("b_k"), tape);
                scores_pre = matmul(q_emb, transpose2d(k_emb, tape), tape);
                att = scale(scores_pre, 1.0 / np, tape);
                break;
            case NlVariant::concat: {
                // w_q [x_i, x_j] + b = u.x_i + v.x_j + b with w_q = [u; v]
                const Tensor& wq = bp.find("w_q");
                Tensor u = slice_rows(wq, 0, c, tape);
                Tensor v = slice_rows(wq, c, 2 * c, tape);
                Tensor pi = add(matmul(X, u, tape), bp.find("b_q"), tape);  // [Np,1]
                Tensor pj = matmul(X, v, tape);                             // [Np,1]
                scores_pre = relu(add(pi, transpose2d(pj, tape), tape), tape);
                att = scale(scores_pre, 1.0 / np, tape);
                break;
            }
        }

        Tensor V = linear(X, bp.find("w_v"), bp.find("b_v"), tape);  // [Np, Ch]
        Tensor Y = matmul(att, V, tape);                             // [Np, Ch]
        Tensor Z = linear(Y, bp.find("w_z"), bp.find("b_z"), tape);  // [Np, C]
        Tensor zp = add(view.pos_mat, transpose2d(Z, tape), tape);   // [C, Np]

        if (trace && s == 0) {
            trace->input = Tensor({np, c}, X.vec());
            if (spec.variant == NlVariant::e_gaussian || spec.variant == NlVariant::dot) {
                trace->key = Tensor(k_emb.shape(), k_emb.vec());
                trace->query = Tensor(q_emb.shape(), q_emb.vec());
            }
            trace->prod = Tensor({np, np}, scores_pre.vec());
            AttentionMap m;
            m.np = np;
            m.global = false;
            m.weights = att.vec();
            trace->att = std::move(m);
            trace->output = residual_removed(zp, view.pos_mat, c, np);
        }
        outs.push_back(reshape(zp, {c, h, w}, tape));
    }
    return stack0(outs, tape);
}

namespace {

// global attention logits + softmax over positions; returns alpha [Np,1]
Tensor attention_pool_alpha(const BlockParams& bp, const Tensor& X, Tape* tape,
                            Tensor* logits_out = nullptr) {
    Tensor logits = linear(X, bp.find("w_k"), bp.find("b_k"), tape);  // [Np,1]
    if (logits_out) *logits_out = logits;
    return softmax(logits, 0, tape);
}

}  // namespace

Tensor snl_forward(const BlockParams& bp, const Tensor& x, SnlForm form, Tape* tape,
                   ProbeTrace* trace) {
    const BlockSpec& spec = bp.spec;
    if (spec.kind != BlockKind::snl) throw ConfigError("snl_forward on a non-snl block");
    check_input(spec, x);
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int np = h * w;

    std::vector<Tensor> outs;
    outs.reserve(size_t(n));
    for (int s = 0; s < n; ++s) {
        auto view = sample_view(x, s, c, np, tape);
        const Tensor& X = view.features;
        Tensor logits;
        Tensor alpha = attention_pool_alpha(bp, X, tape, &logits);
        Tensor ctx;  // [1, C]
        if (form == SnlForm::pre_distributive) {
            Tensor V = linear(X, bp.find("w_v"), bp.find("b_v"), tape);  // [Np, C]
            ctx = matmul(transpose2d(alpha, tape), V, tape);
        } else {
            Tensor pooled = matmul(transpose2d(alpha, tape), X, tape);  // [1, C]
            ctx = linear(pooled, bp.find("w_v"), bp.find("b_v"), tape);
        }
        Tensor zp = add(view.pos_mat, transpose2d(ctx, tape), tape);  // [C,Np] + [C,1]

        if (trace && s == 0) {
            trace->input = Tensor({np, c}, X.vec());
            trace->key = Tensor({np, 1}, logits.vec());
            trace->att = global_alpha_map(alpha, np);
            trace->output = residual_removed(zp, view.pos_mat, c, np);
        }
        outs.push_back(reshape(zp, {c, h, w}, tape));
    }
    return stack0(outs, tape);
}

Tensor gc_forward(const BlockParams& bp, const Tensor& x, Tape* tape, ProbeTrace* trace) {
    const BlockSpec& spec = bp.spec;
    if (spec.kind != BlockKind::gc && spec.kind != BlockKind::framework)
        throw ConfigError("gc_forward needs gc-shaped parameters");
    check_input(spec, x);
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int np = h * w;

    std::vector<Tensor> outs;
    outs.reserve(size_t(n));
    for (int s = 0; s < n; ++s) {
        auto view = sample_view(x, s, c, np, tape);
        const Tensor& X = view.features;
        Tensor logits;
        Tensor alpha = attention_pool_alpha(bp, X, tape, &logits);
        Tensor pooled = matmul(transpose2d(alpha, tape), X, tape);        // [1, C]
        Tensor hmid = linear(pooled, bp.find("w_v1"), bp.find("b_v1"), tape);
        hmid = layer_norm(hmid, kLayerNormEps, bp.find("ln_gamma"), bp.find("ln_beta"), tape);
        hmid = relu(hmid, tape);
        Tensor d = linear(hmid, bp.find("w_v2"), bp.find("b_v2"), tape);  // [1, C]
        Tensor zp = add(view.pos_mat, transpose2d(d, tape), tape);

        if (trace && s == 0) {
            trace->input = Tensor({np, c}, X.vec());
            trace->key = Tensor({np, 1}, logits.vec());
            trace->att = global_alpha_map(alpha, np);
            trace->output = residual_removed(zp, view.pos_mat, c, np);
        }
        outs.push_back(reshape(zp, {c, h, w}, tape));
    }
    return stack0(outs, tape);
}

Tensor se_forward(const BlockParams& bp, const Tensor& x, Tape* tape, ProbeTrace* trace) {
    const BlockSpec& spec = bp.spec;
    if (spec.kind != BlockKind::se && spec.kind != BlockKind::framework)
        throw ConfigError("se_forward needs se-shaped parameters");
    check_input(spec, x);
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int np = h * w;

    std::vector<Tensor> outs;
    outs.reserve(size_t(n));
    for (int s = 0; s < n; ++s) {
        auto view = sample_view(x, s, c, np, tape);
        Tensor squeezed = transpose2d(rowmean(view.pos_mat, tape), tape);    // [1, C]
        Tensor hmid = relu(linear(squeezed, bp.find("w_1"), bp.find("b_1"), tape), tape);
        Tensor gate = sigmoid(linear(hmid, bp.find("w_2"), bp.find("b_2"), tape), tape);
        Tensor zp = mul(view.pos_mat, transpose2d(gate, tape), tape);        // [C,Np] * [C,1]

        if (trace && s == 0) {
            trace->input = Tensor({np, c}, view.features.vec());
            trace->att = uniform_alpha_map(np);
            trace->output = residual_removed(zp, view.pos_mat, c, np);
        }
        outs.push_back(reshape(zp, {c, h, w}, tape));
    }
    return stack0(outs, tape);
}

Tensor framework_forward(const BlockParams& bp, const Tensor& x, Tape* tape, ProbeTrace* trace) {
    const BlockSpec& spec = bp.spec;
    if (spec.kind != BlockKind::framework)
        throw ConfigError("framework_forward requires kind=framework");
    spec.validate();
    check_input(spec, x);
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int np = h * w;

    std::vector<Tensor> outs;
    outs.reserve(size_t(n));
    for (int s = 0; s < n; ++s) {
        auto view = sample_view(x, s, c, np, tape);
        const Tensor& X = view.features;

        // context modeling: weighted sum of position features
        Tensor alpha_row;  // [1, Np]
        Tensor logits;
        if (spec.pooling == Pooling::att) {
            alpha_row = transpose2d(attention_pool_alpha(bp, X, tape, &logits), tape);
        } else {
            alpha_row = Tensor::full({1, np}, 1.0 / np);
        }
        Tensor pooled = matmul(alpha_row, X, tape);  // [1, C]

        // transform
        Tensor d = pooled;
        switch (spec.transform) {
            case Transform::bottleneck_ln_relu: {
                Tensor t = linear(pooled, bp.find("w_v1"), bp.find("b_v1"), tape);
                t = layer_norm(t, kLayerNormEps, bp.find("ln_gamma"), bp.find("ln_beta"), tape);
                t = relu(t, tape);
                d = linear(t, bp.find("w_v2"), bp.find("b_v2"), tape);
                break;
            }
            case Transform::bottleneck_sigmoid: {
                Tensor t = relu(linear(pooled, bp.find("w_1"), bp.find("b_1"), tape), tape);
                d = sigmoid(linear(t, bp.find("w_2"), bp.find("b_2"), tape), tape);
                break;
            }
            case Transform::single_linear:
                d = linear(pooled, bp.find("w_v"), bp.find("b_v"), tape);
                break;
            case Transform::none:
                break;
        }

        // fusion
        Tensor dcol = transpose2d(d, tape);  // [C, 1]
        Tensor zp = spec.fusion == Fusion::add ? add(view.pos_mat, dcol, tape)
                                               : mul(view.pos_mat, dcol, tape);

        if (trace && s == 0) {
            trace->input = Tensor({np, c}, X.vec());
            if (spec.pooling == Pooling::att) {
                trace->key = Tensor({np, 1}, logits.vec());
                AttentionMap m;
                m.np = np;
                m.global = true;
                m.weights.assign(alpha_row.data(), alpha_row.data() + np);
                trace->att = std::move(m);
            } else {
                trace->att = uniform_alpha_map(np);
            }
            trace->output = residual_removed(zp, view.pos_mat, c, np);
        }
        outs.push_back(reshape(zp, {c, h, w}, tape));
    }
    return stack0(outs, tape);
}

Tensor block_forward(const BlockParams& bp, const Tensor& x, Tape* tape, ProbeTrace* trace) {
    switch (bp.spec.kind) {
        case BlockKind::nl: return nl_forward(bp, x, tape, trace);
        case BlockKind::snl: return snl_forward(bp, x, bp.spec.snl_form, tape, trace);
        case BlockKind::gc: return gc_forward(bp, x, tape, trace);
        case BlockKind::se: return se_forward(bp, x, tape, trace);
        case BlockKind::framework: return framework_forward(bp, x, tape, trace);
    }
    throw ConfigError("unknown block kind");
}

AttentionMap attention_map(const BlockParams& bp, const Tensor& x) {
    ProbeTrace trace;
    block_forward(bp, x, nullptr, &trace);
    if (!trace.att) throw ContractError("block produced no attention map");
    return *trace.att;
}

}  // namespace gctx
