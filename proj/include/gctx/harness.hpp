#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gctx/blocks.hpp"
#include "gctx/cost_model.hpp"
#include "gctx/tensor.hpp"

namespace gctx {

// Synthetic global-majority task: every image scatters colored pixels of all
// K classes; the label is the class whose signature color covers the most
// pixels (the generator makes that argmax strict). A per-image brightness
// factor keeps absolute channel sums uninformative.
struct ToyDatasetSpec {
    uint64_t seed = 0;
    int num_samples = 512;
    int height = 16, width = 16;  // channels fixed at 3
    int num_classes = 4;          // at most 8 (palette size)
    double density = 0.35;        // fraction of pixels colored
};

struct ToySample {
    Tensor image;  // [3, H, W]
    int label = 0;
};

struct ToyDataset {
    std::vector<ToySample> train, test;  // 80/20 split by index
    int num_classes = 4;
};

ToyDataset gen_dataset(const ToyDatasetSpec& spec);

struct ToyInsertion {
    int stage = 0;  // 0-based
    int block_index = 0;
    InsertPos pos = InsertPos::after1x1;
    BlockSpec block;  // channels filled at build time
};

struct ToyInsertPlanItem {
    std::vector<int> stages;
    bool plus_one = false;
    InsertPos pos = InsertPos::after1x1;
    BlockSpec block;
};

// Stem 3x3 conv, then per stage `blocks_per_stage` residual units
// (y = relu(x + conv3x3(x))) at constant 16x16 resolution, 1x1 transition
// convs between stages, global average pool + fc head. No batch norm. The
// trunk's receptive field stays below the image size.
struct ToyNetSpec {
    std::vector<int> stage_widths = {16, 32, 64};
    int blocks_per_stage = 2;
    int num_classes = 4;
    std::vector<ToyInsertion> insertions;
};

std::vector<ToyInsertion> expand_toy_plan(const ToyNetSpec& spec,
                                          const std::vector<ToyInsertPlanItem>& plan);

int receptive_field(const ToyNetSpec& spec);  // of the conv trunk

struct ToyNet {
    ToyNetSpec spec;
    std::vector<std::pair<std::string, Tensor>> params;  // trunk + head
    struct InsertedBlock {
        ToyInsertion where;
        BlockParams block;
    };
    std::vector<InsertedBlock> blocks;

    std::vector<Tensor*> all_params();
};

ToyNet build_net(const ToyNetSpec& spec, uint64_t seed);

// logits [B, K]
Tensor net_forward(ToyNet& net, const Tensor& batch, Tape* tape = nullptr);

struct TrainConfig {
    int epochs = 5;
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int batch_size = 32;
    uint64_t shuffle_seed = 1;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double test_acc = 0.0;
};

// SGD with momentum and weight decay on cross-entropy; fully deterministic
// given (net seed, data seed, shuffle seed). TrainingError on non-finite loss.
std::vector<EpochMetrics> train(ToyNet& net, const ToyDataset& data, const TrainConfig& cfg);

// argmax accuracy; ties break to the lowest class index. ContractError on an
// empty test set.
double evaluate(ToyNet& net, const std::vector<ToySample>& samples);

// `epoch,train_loss,test_acc`
void write_metrics_csv(const std::vector<EpochMetrics>& metrics, std::ostream& os);

}  // namespace gctx
