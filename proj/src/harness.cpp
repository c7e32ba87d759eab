#include "gctx/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "gctx/ops.hpp"
#include "gctx/rng.hpp"

namespace gctx {

namespace {

constexpr int kPalette = 8;
constexpr double kColors[kPalette][3] = {
    {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.7, 0.7, 0.0},
    {0.7, 0.0, 0.7}, {0.0, 0.7, 0.7}, {0.6, 0.6, 0.6}, {1.0, 0.5, 0.0}};

}  // namespace

ToyDataset gen_dataset(const ToyDatasetSpec& spec) {
    if (spec.num_classes < 2) throw ConfigError("toy dataset needs at least 2 classes");
    if (spec.num_classes > kPalette)
        throw ConfigError("toy dataset supports at most " + std::to_string(kPalette) + " classes");
    if (spec.density <= 0.0 || spec.density > 1.0)
        throw ConfigError("toy dataset density must be in (0, 1]");
    int hw = spec.height * spec.width;
    int k = spec.num_classes;
    int colored = int(std::lround(spec.density * hw));
    if (colored < k + 1)
        throw ConfigError("density too low: fewer colored pixels than classes");

    CounterRng rng(CounterRng::derive(spec.seed, "toy-dataset"));
    ToyDataset data;
    data.num_classes = k;
    std::vector<int> order(size_t(hw), 0);

    for (int s = 0; s < spec.num_samples; ++s) {
        int label = int(rng.next_index(uint64_t(k)));
        // strict majority for the label class, the rest split evenly
        int base = colored / (k + 2);
        int major = colored - (k - 1) * base;
        double brightness = rng.next_uniform(0.6, 1.4);

        std::iota(order.begin(), order.end(), 0);
        for (int i = hw - 1; i > 0; --i)
            std::swap(order[size_t(i)], order[rng.next_index(uint64_t(i + 1))]);

        Tensor img({3, spec.height, spec.width});
        double* p = img.raw();
        int used = 0;
        for (int cls = 0; cls < k; ++cls) {
            int count = cls == label ? major : base;
            for (int t = 0; t < count; ++t) {
                int pos = order[size_t(used++)];
                for (int ch = 0; ch < 3; ++ch)
                    p[int64_t(ch) * hw + pos] = kColors[cls][ch] * brightness;
            }
        }
        ToySample sample{std::move(img), label};
        data.train.push_back(std::move(sample));
    }
    int test_count = spec.num_samples / 5;
    int train_count = spec.num_samples - test_count;
    data.test.assign(data.train.begin() + train_count, data.train.end());
    data.train.resize(size_t(train_count));
    return data;
}

std::vector<ToyInsertion> expand_toy_plan(const ToyNetSpec& spec,
                                          const std::vector<ToyInsertPlanItem>& plan) {
    std::vector<ToyInsertion> out;
    for (const auto& item : plan) {
        for (int stage : item.stages) {
            if (stage < 0 || stage >= int(spec.stage_widths.size()))
                throw ConfigError("toy insertion references unknown stage s" +
                                  std::to_string(stage + 1));
            if (item.plus_one) {
                if (spec.blocks_per_stage < 2)
                    throw ConfigError("stage too short for a +1 insertion");
                out.push_back({stage, spec.blocks_per_stage - 2, item.pos, item.block});
            } else {
                for (int b = 0; b < spec.blocks_per_stage; ++b)
                    out.push_back({stage, b, item.pos, item.block});
            }
        }
    }
    return out;
}

int receptive_field(const ToyNetSpec& spec) {
    // 3x3 stem + one 3x3 conv per residual unit, all at stride 1;
    // 1x1 transitions add nothing
    int convs3 = 1 + int(spec.stage_widths.size()) * spec.blocks_per_stage;
    return 1 + 2 * convs3;
}

namespace {

Tensor conv_weight(uint64_t seed, const std::string& name, int cout, int cin, int k) {
    return rng_tensor(CounterRng::derive(seed, name.c_str()), {cout, cin, k, k},
                      Kaiming{cin * k * k});
}

std::string stage_block_name(int stage, int block) {
    return "s" + std::to_string(stage + 1) + ".b" + std::to_string(block + 1);
}

}  // namespace

std::vector<Tensor*> ToyNet::all_params() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : params) out.push_back(&t);
    for (auto& ib : blocks)
        for (auto& [name, t] : ib.block.params) out.push_back(&t);
    return out;
}

ToyNet build_net(const ToyNetSpec& spec, uint64_t seed) {
    if (spec.stage_widths.empty()) throw ConfigError("toy net needs at least one stage");
    ToyNet net;
    net.spec = spec;
    auto add = [&](const std::string& name, Tensor t) {
        net.params.emplace_back(name, std::move(t));
    };

    add("stem.w", conv_weight(seed, "stem.w", spec.stage_widths[0], 3, 3));
    add("stem.b", Tensor({spec.stage_widths[0]}));
    // residual branches start damped so the un-normalized trunk keeps unit
    // scale and the default learning rate stays stable
    int total_units = int(spec.stage_widths.size()) * spec.blocks_per_stage;
    double branch_gain = 1.0 / std::sqrt(2.0 * total_units);
    for (size_t s = 0; s < spec.stage_widths.size(); ++s) {
        int c = spec.stage_widths[s];
        for (int b = 0; b < spec.blocks_per_stage; ++b) {
            std::string base = stage_block_name(int(s), b);
            Tensor w = conv_weight(seed, base + ".w", c, c, 3);
            for (int64_t i = 0; i < w.size(); ++i) w.raw()[i] *= branch_gain;
            add(base + ".w", std::move(w));
            add(base + ".b", Tensor({c}));
        }
        if (s + 1 < spec.stage_widths.size()) {
            std::string base = "t" + std::to_string(s + 1);
            add(base + ".w", conv_weight(seed, base + ".w", spec.stage_widths[s + 1], c, 1));
            add(base + ".b", Tensor({spec.stage_widths[s + 1]}));
        }
    }
    int cf = spec.stage_widths.back();
    add("fc.w", rng_tensor(CounterRng::derive(seed, "fc.w"), {cf, spec.num_classes}, Kaiming{cf}));
    add("fc.b", Tensor({1, spec.num_classes}));

    for (const auto& ins : spec.insertions) {
        if (ins.stage < 0 || ins.stage >= int(spec.stage_widths.size()))
            throw ConfigError("toy insertion references unknown stage");
        if (ins.block_index < 0 || ins.block_index >= spec.blocks_per_stage)
            throw ConfigError("toy insertion references unknown block");
        BlockSpec bs = ins.block;
        bs.channels = spec.stage_widths[size_t(ins.stage)];
        std::string name = std::string(to_string(bs.kind)) + "." +
                           stage_block_name(ins.stage, ins.block_index);
        ToyNet::InsertedBlock ib;
        ib.where = ins;
        ib.where.block = bs;
        ib.block = build_block(bs, CounterRng::derive(seed, name.c_str()));
        net.blocks.push_back(std::move(ib));
    }
    return net;
}

namespace {

Tensor global_avg_pool(const Tensor& h, Tape* tape) {
    int b = h.dim(0), c = h.dim(1), hw = h.dim(2) * h.dim(3);
    std::vector<Tensor> pooled;
    pooled.reserve(size_t(b));
    for (int s = 0; s < b; ++s) {
        Tensor flat = reshape(select0(h, s, tape), {c, hw}, tape);
        pooled.push_back(transpose2d(rowmean(flat, tape), tape));  // [1, C]
    }
    return reshape(stack0(pooled, tape), {b, c}, tape);
}

}  // namespace

Tensor net_forward(ToyNet& net, const Tensor& batch, Tape* tape) {
    if (batch.rank() != 4 || batch.dim(1) != 3)
        throw ShapeError("toy net input must be [B,3,H,W]");
    auto& spec = net.spec;
    auto find = [&](const std::string& name) -> Tensor& {
        for (auto& [n, t] : net.params)
            if (n == name) return t;
        throw ContractError("toy net missing parameter " + name);
    };
    auto block_at = [&](int stage, int bidx) -> ToyNet::InsertedBlock* {
        for (auto& ib : net.blocks)
            if (ib.where.stage == stage && ib.where.block_index == bidx) return &ib;
        return nullptr;
    };

    Tensor h = relu(conv2d(batch, find("stem.w"), &find("stem.b"), 1, 1, tape), tape);
    for (size_t s = 0; s < spec.stage_widths.size(); ++s) {
        for (int b = 0; b < spec.blocks_per_stage; ++b) {
            std::string base = stage_block_name(int(s), b);
            Tensor branch = conv2d(h, find(base + ".w"), &find(base + ".b"), 1, 1, tape);
            ToyNet::InsertedBlock* ib = block_at(int(s), b);
            if (ib && ib->where.pos == InsertPos::after1x1)
                branch = block_forward(ib->block, branch, tape);
            h = relu(add(h, branch, tape), tape);
            if (ib && ib->where.pos == InsertPos::afterAdd)
                h = block_forward(ib->block, h, tape);
        }
        if (s + 1 < spec.stage_widths.size()) {
            std::string base = "t" + std::to_string(s + 1);
            h = relu(conv2d(h, find(base + ".w"), &find(base + ".b"), 1, 0, tape), tape);
        }
    }
    Tensor pooled = global_avg_pool(h, tape);  // [B, C]
    return add(matmul(pooled, find("fc.w"), tape), find("fc.b"), tape);
}

namespace {

Tensor make_batch(const std::vector<ToySample>& samples, const std::vector<int>& idx,
                  size_t lo, size_t hi) {
    const Shape& s = samples[0].image.shape();
    Tensor batch({int(hi - lo), s[0], s[1], s[2]});
    int64_t block = samples[0].image.size();
    double* q = batch.raw();
    for (size_t i = lo; i < hi; ++i) {
        const double* p = samples[size_t(idx[i])].image.data();
        std::copy(p, p + block, q + int64_t(i - lo) * block);
    }
    return batch;
}

std::vector<int> batch_labels(const std::vector<ToySample>& samples, const std::vector<int>& idx,
                              size_t lo, size_t hi) {
    std::vector<int> out;
    out.reserve(hi - lo);
    for (size_t i = lo; i < hi; ++i) out.push_back(samples[size_t(idx[i])].label);
    return out;
}

}  // namespace

std::vector<EpochMetrics> train(ToyNet& net, const ToyDataset& data, const TrainConfig& cfg) {
    if (data.train.empty()) throw ContractError("train called with an empty dataset");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be positive");

    auto params = net.all_params();
    std::vector<std::vector<double>> velocity(params.size());
    for (size_t i = 0; i < params.size(); ++i)
        velocity[i].assign(size_t(params[i]->size()), 0.0);

    std::vector<int> idx(data.train.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<EpochMetrics> history;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        CounterRng shuffle(CounterRng::derive(cfg.shuffle_seed ^ (uint64_t(epoch) << 20), "shuffle"));
        for (size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[shuffle.next_index(uint64_t(i + 1))]);

        double loss_sum = 0.0;
        int64_t seen = 0;
        for (size_t lo = 0; lo < idx.size(); lo += size_t(cfg.batch_size)) {
            size_t hi = std::min(idx.size(), lo + size_t(cfg.batch_size));
            Tensor batch = make_batch(data.train, idx, lo, hi);
            std::vector<int> labels = batch_labels(data.train, idx, lo, hi);

            Tape tape;
            for (Tensor* p : params) tape.watch(*p);
            Tensor logits = net_forward(net, batch, &tape);
            Tensor loss = cross_entropy(logits, labels, &tape);
            double lv = loss.item();
            if (!std::isfinite(lv))
                throw TrainingError("training diverged at epoch " + std::to_string(epoch), epoch);
            loss_sum += lv * double(hi - lo);
            seen += int64_t(hi - lo);

            tape.backward(loss);
            for (size_t i = 0; i < params.size(); ++i) {
                Tensor g = tape.grad(*params[i]);
                const double* pg = g.data();
                const double* pw = params[i]->data();
                std::vector<double> next(size_t(params[i]->size()));
                auto& v = velocity[i];
                for (size_t j = 0; j < next.size(); ++j) {
                    v[j] = cfg.momentum * v[j] + pg[j] + cfg.weight_decay * pw[j];
                    next[j] = pw[j] - cfg.lr * v[j];
                }
                *params[i] = Tensor(params[i]->shape(), std::move(next));
            }
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / double(seen);
        m.test_acc = data.test.empty() ? 0.0 : evaluate(net, data.test);
        history.push_back(m);
    }
    return history;
}

double evaluate(ToyNet& net, const std::vector<ToySample>& samples) {
    if (samples.empty()) throw ContractError("evaluate called with an empty test set");
    std::vector<int> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    int64_t correct = 0;
    for (size_t lo = 0; lo < samples.size(); lo += 64) {
        size_t hi = std::min(samples.size(), lo + 64);
        Tensor batch = make_batch(samples, idx, lo, hi);
        Tensor logits = net_forward(net, batch, nullptr);
        int k = logits.dim(1);
        for (size_t r = 0; r < hi - lo; ++r) {
            const double* row = logits.data() + int64_t(r) * k;
            int best = 0;
            for (int j = 1; j < k; ++j)
                if (row[j] > row[best]) best = j;  // ties keep the lowest index
            if (best == samples[lo + r].label) ++correct;
        }
    }
    return double(correct) / double(samples.size());
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, std::ostream& os) {
    os << "epoch,train_loss,test_acc\n";
    char buf[96];
    for (const auto& m : metrics) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g\n", m.epoch, m.train_loss, m.test_acc);
        os << buf;
    }
}

}  // namespace gctx
