#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gctx/harness.hpp"
#include "gctx/ops.hpp"

using namespace gctx;

namespace {

ToyDatasetSpec small_data_spec() {
    ToyDatasetSpec ds;
    ds.seed = 0;
    ds.num_samples = 240;
    ds.density = 0.6;
    return ds;
}

ToyNetSpec small_net_spec() {
    ToyNetSpec ns;
    ns.stage_widths = {12};
    return ns;
}

BlockSpec gc_r4() {
    BlockSpec gc;
    gc.kind = BlockKind::gc;
    gc.bottleneck_ratio = 4;
    return gc;
}

}  // namespace

TEST_CASE("gen_dataset: labels are the pixel-count majority by construction") {
    ToyDataset data = gen_dataset(small_data_spec());
    CHECK(data.train.size() == 192);
    CHECK(data.test.size() == 48);
    for (const auto& s : data.train) {
        // recount colored pixels per class from the image itself
        int counts[8] = {};
        const double* p = s.image.data();
        int hw = 16 * 16;
        const double palette[4][3] = {
            {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.7, 0.7, 0.0}};
        for (int pos = 0; pos < hw; ++pos) {
            double r = p[pos], g = p[hw + pos], b = p[2 * hw + pos];
            if (r == 0.0 && g == 0.0 && b == 0.0) continue;
            for (int k = 0; k < 4; ++k) {
                // brightness scales all three channels equally
                double scale = 0.0;
                bool match = true;
                for (int ch = 0; ch < 3; ++ch) {
                    double want = palette[k][ch];
                    double have = ch == 0 ? r : ch == 1 ? g : b;
                    if (want == 0.0) {
                        if (have != 0.0) match = false;
                    } else {
                        double ratio = have / want;
                        if (scale == 0.0) scale = ratio;
                        else if (std::fabs(ratio - scale) > 1e-9) match = false;
                    }
                }
                if (match && scale > 0.0) {
                    ++counts[k];
                    break;
                }
            }
        }
        int best = 0;
        for (int k = 1; k < 4; ++k)
            if (counts[k] > counts[best]) best = k;
        CHECK(best == s.label);
        for (int k = 0; k < 4; ++k)
            if (k != best) CHECK(counts[best] > counts[k]);  // strict majority
    }
}

TEST_CASE("gen_dataset: deterministic and balanced") {
    ToyDataset a = gen_dataset(small_data_spec());
    ToyDataset b = gen_dataset(small_data_spec());
    REQUIRE(a.train.size() == b.train.size());
    for (size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].label == b.train[i].label);
        CHECK(a.train[i].image.same_bits(b.train[i].image));
    }

    ToyDatasetSpec two;
    two.seed = 0;
    two.num_classes = 2;
    two.density = 1.0;
    two.num_samples = 1000;
    ToyDataset d2 = gen_dataset(two);
    int zero = 0;
    for (const auto& s : d2.train) zero += s.label == 0;
    for (const auto& s : d2.test) zero += s.label == 0;
    CHECK(zero >= 450);
    CHECK(zero <= 550);

    ToyDatasetSpec bad = small_data_spec();
    bad.num_classes = 1;
    CHECK_THROWS_AS(gen_dataset(bad), ConfigError);
    bad = small_data_spec();
    bad.density = 0.01;  // fewer colored pixels than classes
    CHECK_THROWS_AS(gen_dataset(bad), ConfigError);
}

TEST_CASE("receptive field of the default trunk stays below the image") {
    ToyNetSpec ns;  // defaults [16,32,64] x 2
    CHECK(receptive_field(ns) == 15);
    CHECK(receptive_field(ns) < 16);
}

TEST_CASE("build_net: deterministic and insertion-independent trunk weights") {
    ToyNetSpec ns = small_net_spec();
    ToyNet a = build_net(ns, 3);
    ToyNet b = build_net(ns, 3);
    REQUIRE(a.params.size() == b.params.size());
    for (size_t i = 0; i < a.params.size(); ++i)
        CHECK(a.params[i].second.same_bits(b.params[i].second));

    ToyNetSpec with_gc = ns;
    with_gc.insertions = expand_toy_plan(ns, {{{0}, false, InsertPos::after1x1, gc_r4()}});
    ToyNet c = build_net(with_gc, 3);
    for (size_t i = 0; i < a.params.size(); ++i)
        CHECK(a.params[i].second.same_bits(c.params[i].second));
}

TEST_CASE("gc insertion is the exact identity before the first update") {
    ToyDataset data = gen_dataset(small_data_spec());
    ToyNetSpec ns = small_net_spec();
    ToyNet baseline = build_net(ns, 0);
    ToyNetSpec gns = ns;
    gns.insertions = expand_toy_plan(ns, {{{0}, false, InsertPos::after1x1, gc_r4()}});
    ToyNet gcnet = build_net(gns, 0);

    Tensor batch({8, 3, 16, 16});
    std::vector<int> labels;
    for (int i = 0; i < 8; ++i) {
        std::copy(data.train[i].image.data(), data.train[i].image.data() + 768,
                  batch.raw() + i * 768);
        labels.push_back(data.train[i].label);
    }
    Tensor lb = net_forward(baseline, batch);
    Tensor lg = net_forward(gcnet, batch);
    CHECK(lb.same_values(lg));
    double loss_b = cross_entropy(lb, labels).item();
    double loss_g = cross_entropy(lg, labels).item();
    CHECK(std::fabs(loss_b - loss_g) < 1e-10);
}

TEST_CASE("train: zero learning rate leaves parameters untouched") {
    ToyDataset data = gen_dataset(small_data_spec());
    ToyNetSpec ns = small_net_spec();
    ToyNet net = build_net(ns, 1);
    std::vector<Tensor> before;
    for (Tensor* p : net.all_params()) before.push_back(*p);
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.weight_decay = 0.0;
    cfg.epochs = 2;
    train(net, data, cfg);
    auto after = net.all_params();
    for (size_t i = 0; i < after.size(); ++i) CHECK(before[i].same_values(*after[i]));
}

TEST_CASE("train: baseline seed 0 halves its loss in five epochs") {
    // thresholds frozen from the oracle baseline run (lr 0.03, width 12)
    ToyDataset data = gen_dataset(small_data_spec());
    ToyNet net = build_net(small_net_spec(), 0);
    TrainConfig cfg;
    cfg.lr = 0.03;
    cfg.epochs = 5;
    auto hist = train(net, data, cfg);
    REQUIRE(hist.size() == 5);
    CHECK(hist.back().train_loss <= 0.5 * hist.front().train_loss);
}

TEST_CASE("train: metrics history is deterministic") {
    ToyDataset data = gen_dataset(small_data_spec());
    TrainConfig cfg;
    cfg.lr = 0.03;
    cfg.epochs = 3;
    ToyNet a = build_net(small_net_spec(), 2);
    ToyNet b = build_net(small_net_spec(), 2);
    auto ha = train(a, data, cfg);
    auto hb = train(b, data, cfg);
    REQUIRE(ha.size() == hb.size());
    for (size_t i = 0; i < ha.size(); ++i) {
        CHECK(ha[i].train_loss == hb[i].train_loss);
        CHECK(ha[i].test_acc == hb[i].test_acc);
    }
}

TEST_CASE("train: divergence raises a training error with the epoch index") {
    ToyDataset data = gen_dataset(small_data_spec());
    ToyNet net = build_net(small_net_spec(), 0);
    TrainConfig cfg;
    cfg.lr = 1e9;
    cfg.epochs = 4;
    try {
        train(net, data, cfg);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch >= 0);
        CHECK(e.epoch < 4);
    }
}

TEST_CASE("evaluate: untrained nets sit in the near-chance band") {
    ToyDatasetSpec ds = small_data_spec();
    ds.num_samples = 400;
    ToyDataset data = gen_dataset(ds);
    for (uint64_t seed = 0; seed < 5; ++seed) {
        ToyNet net = build_net(small_net_spec(), seed);
        double acc = evaluate(net, data.test);
        CHECK(acc >= 0.15);
        CHECK(acc <= 0.40);
    }
}

TEST_CASE("evaluate: memorizes an 8-sample subset after 200 epochs") {
    ToyDatasetSpec ds = small_data_spec();
    ds.num_samples = 400;
    ToyDataset data = gen_dataset(ds);
    ToyDataset tiny;
    tiny.num_classes = 4;
    tiny.train.assign(data.train.begin(), data.train.begin() + 8);
    tiny.test = tiny.train;
    ToyNet net = build_net(small_net_spec(), 1);
    TrainConfig cfg;
    cfg.lr = 0.1;
    cfg.batch_size = 8;
    cfg.epochs = 200;
    auto hist = train(net, tiny, cfg);
    CHECK(hist.back().test_acc == 1.0);
}

TEST_CASE("evaluate: empty test set is a contract error") {
    ToyNet net = build_net(small_net_spec(), 0);
    std::vector<ToySample> empty;
    CHECK_THROWS_AS(evaluate(net, empty), ContractError);
}

TEST_CASE("metrics csv format") {
    std::vector<EpochMetrics> m = {{0, 1.5, 0.25}, {1, 0.75, 0.5}};
    std::ostringstream os;
    write_metrics_csv(m, os);
    CHECK(os.str() == "epoch,train_loss,test_acc\n0,1.5,0.25\n1,0.75,0.5\n");
}

TEST_CASE("expand_toy_plan: +1 and all grammars") {
    ToyNetSpec ns;  // blocks_per_stage = 2
    auto all = expand_toy_plan(ns, {{{0, 1, 2}, false, InsertPos::after1x1, gc_r4()}});
    CHECK(all.size() == 6);
    auto plus1 = expand_toy_plan(ns, {{{2}, true, InsertPos::afterAdd, gc_r4()}});
    REQUIRE(plus1.size() == 1);
    CHECK(plus1[0].stage == 2);
    CHECK(plus1[0].block_index == 0);  // right before the last of 2
    CHECK_THROWS_AS(expand_toy_plan(ns, {{{5}, false, InsertPos::after1x1, gc_r4()}}),
                    ConfigError);
}
