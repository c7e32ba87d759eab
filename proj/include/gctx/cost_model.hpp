#pragma once

#include <string>
#include <variant>
#include <vector>

#include "gctx/blocks.hpp"

namespace gctx {

// Execution-free layer descriptors for parameter / MAC counting.
struct ConvLayer {
    int cin = 0, cout = 0, k = 1, stride = 1, pad = 0;
    bool bias = false;
};
struct BnLayer {
    int c = 0;  // affine only: 2C params, running stats excluded
};
struct FcLayer {
    int in = 0, out = 0;  // bias always counted
};
enum class PoolKind { max, global_avg };
struct PoolLayer {
    PoolKind kind = PoolKind::max;
    int k = 1, stride = 1, pad = 0;
};
using Layer = std::variant<ConvLayer, BnLayer, FcLayer, PoolLayer>;

struct ResBlock {
    std::vector<Layer> main;
    std::vector<Layer> shortcut;  // downsample projection, empty for identity
};

struct StageDesc {
    std::string name;  // c2..c5
    std::vector<ResBlock> blocks;
};

enum class InsertPos { after1x1, afterAdd };
const char* to_string(InsertPos p);

struct Insertion {
    std::string stage;
    int block_index = 0;
    InsertPos pos = InsertPos::after1x1;
    BlockSpec block;
};

struct ArchDescriptor {
    std::string name;
    int input_h = 224, input_w = 224;
    std::vector<Layer> stem;
    std::vector<StageDesc> stages;
    std::vector<Layer> head;
    std::vector<Insertion> insertions;

    const StageDesc& stage(const std::string& name) const;  // ConfigError if unknown
};

// Standard ResNet-50: 7x7/64 stride-2 stem, max pool, stages c2..c5 with
// (3,4,6,3) bottleneck blocks and channels (256,512,1024,2048), BN after
// every conv, global average pool, fc head.
ArchDescriptor describe_resnet50(int num_classes = 1000, int input = 224);

struct InsertPlanItem {
    std::vector<std::string> stages;  // e.g. {"c3","c4","c5"}
    bool plus_one = false;            // single block right before the stage's last residual block
    InsertPos pos = InsertPos::after1x1;
    BlockSpec block;                  // channels filled per slot
};

ArchDescriptor insert_blocks(ArchDescriptor arch, const std::vector<InsertPlanItem>& plan);

struct InsertionCost {
    std::string label;  // e.g. "gc@c4[4] after1x1"
    long long params = 0;
    long long macs = 0;
};

struct CostReport {
    long long params = 0;       // arch including insertions
    long long macs = 0;
    long long base_params = 0;  // arch without insertions
    long long base_macs = 0;
    std::vector<InsertionCost> per_insertion;

    double params_m() const { return double(params) / 1e6; }
    double gflops() const { return double(macs) / 1e9; }

    // the documented counting rule, printed in every report
    static const char* convention();
};

// Counting convention: 1 MAC = 1 FLOP; conv, fc and matmul MACs counted
// (attention logits, pooling and transform matmuls included); softmax, LN,
// activations, pooling windows and elementwise additions excluded; biases add
// parameters but no MACs.
CostReport count_cost(const ArchDescriptor& arch);
CostReport count_params(const ArchDescriptor& arch);  // MAC fields zeroed
CostReport count_flops(const ArchDescriptor& arch);   // param fields zeroed

long long block_param_count(const BlockSpec& spec);
long long block_mac_count(const BlockSpec& spec, int np);

// spatial extent and channel width at each stage boundary, for tests and the
// per-insertion breakdown
struct StageGeom {
    std::string name;
    int spatial = 0;   // output H (= W)
    int channels = 0;  // output channels
    int blocks = 0;
};
std::vector<StageGeom> stage_geometry(const ArchDescriptor& arch);

}  // namespace gctx
