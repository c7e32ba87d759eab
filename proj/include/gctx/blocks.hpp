#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gctx/ops.hpp"
#include "gctx/tape.hpp"
#include "gctx/tensor.hpp"

namespace gctx {

enum class BlockKind { nl, snl, gc, se, framework };
enum class NlVariant { gaussian, e_gaussian, dot, concat };
enum class Pooling { att, avg };
enum class Fusion { add, scale };
enum class Transform { bottleneck_ln_relu, bottleneck_sigmoid, single_linear, none };
enum class SnlForm { pre_distributive, post_distributive };

const char* to_string(BlockKind k);
const char* to_string(NlVariant v);
const char* to_string(Pooling p);
const char* to_string(Fusion f);
const char* to_string(Transform t);
const char* to_string(SnlForm f);

struct BlockSpec {
    BlockKind kind = BlockKind::gc;
    NlVariant variant = NlVariant::e_gaussian;            // nl only
    int channels = 0;
    int hidden_ratio = 2;                                 // nl only: hidden dim C/hidden_ratio
    int bottleneck_ratio = 16;                            // gc / se / framework
    Pooling pooling = Pooling::att;                       // framework only
    Fusion fusion = Fusion::add;                          // framework only
    Transform transform = Transform::bottleneck_ln_relu;  // framework only
    SnlForm snl_form = SnlForm::post_distributive;        // snl only

    void validate() const;  // ConfigError on violation
    bool has_bottleneck() const;
    int hidden_dim() const;  // C/hidden_ratio (nl) or C/bottleneck_ratio

    // JSON object with exactly the relevant field names; unknown keys rejected.
    nlohmann::json to_json() const;
    static BlockSpec from_json(const nlohmann::json& j);
};

// Learnable weights. Linear maps are stored as [in, out] matrices with [1,
// out] biases, equivalent to 1x1 convolutions over positions.
struct BlockParams {
    BlockSpec spec;
    std::vector<std::pair<std::string, Tensor>> params;

    Tensor& find(const std::string& name);
    const Tensor& find(const std::string& name) const;
    bool has(const std::string& name) const;
    int64_t param_count() const;
    void watch_all(Tape& tape);
};

// Normalized attention weights: one row per query position, or a single
// global vector shared by all queries.
struct AttentionMap {
    int np = 0;
    bool global = false;
    std::vector<double> weights;  // np entries (global) or np*np row-major

    const double* row(int i) const { return global ? weights.data() : weights.data() + int64_t(i) * np; }
    // per-query view; replicates the global vector np times when global
    Tensor per_query_matrix() const;
};

// Captures at the six analysis points of a forward pass. Rows are positions;
// `output` holds z_i - x_i (the fused result with the residual removed).
// Probes a block does not compute stay unset.
struct ProbeTrace {
    std::optional<Tensor> input;   // [Np, C]
    std::optional<Tensor> key;     // [Np, dk]
    std::optional<Tensor> query;   // [Np, dq]
    std::optional<Tensor> prod;    // [Np, Np] pre-normalization scores
    std::optional<AttentionMap> att;
    std::optional<Tensor> output;  // [Np, C]
};

// Kaiming init for all weight matrices except gc's w_v2 (zero so the block is
// the identity at insertion); biases zero; LN gamma 1, beta 0.
BlockParams build_block(const BlockSpec& spec, uint64_t seed);

// All forwards take x[N,C,H,W], flatten positions row-major over (H,W), and
// return a tensor of the same shape. Trace capture (sample 0) is optional.
Tensor nl_forward(const BlockParams& bp, const Tensor& x, Tape* tape = nullptr,
                  ProbeTrace* trace = nullptr);
Tensor snl_forward(const BlockParams& bp, const Tensor& x, SnlForm form,
                   Tape* tape = nullptr, ProbeTrace* trace = nullptr);
Tensor gc_forward(const BlockParams& bp, const Tensor& x, Tape* tape = nullptr,
                  ProbeTrace* trace = nullptr);
Tensor se_forward(const BlockParams& bp, const Tensor& x, Tape* tape = nullptr,
                  ProbeTrace* trace = nullptr);
Tensor framework_forward(const BlockParams& bp, const Tensor& x, Tape* tape = nullptr,
                         ProbeTrace* trace = nullptr);

// Dispatch on spec.kind (snl uses spec.snl_form).
Tensor block_forward(const BlockParams& bp, const Tensor& x, Tape* tape = nullptr,
                     ProbeTrace* trace = nullptr);

// Attention map of sample 0: per-query matrix for nl, global vector otherwise.
AttentionMap attention_map(const BlockParams& bp, const Tensor& x);

}  // namespace gctx
