// gctx: verification suites, cost reports, degeneracy statistics, attention
// heatmap export and toy training for global-context blocks.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gctx/analysis.hpp"
#include "gctx/blocks.hpp"
#include "gctx/cost_model.hpp"
#include "gctx/harness.hpp"
#include "gctx/ops.hpp"
#include "gctx/rng.hpp"
#include "gctx/tensor_io.hpp"
#include "gctx/verify.hpp"

using namespace gctx;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

// Values from a --config JSON object override parsed flags; unknown keys are
// rejected like unknown flags.
class ConfigOverride {
public:
    void bind(const std::string& key, int* v) {
        setters_[key] = [v](const json& j) { *v = j.get<int>(); };
    }
    void bind(const std::string& key, double* v) {
        setters_[key] = [v](const json& j) { *v = j.get<double>(); };
    }
    void bind(const std::string& key, std::string* v) {
        setters_[key] = [v](const json& j) { *v = j.get<std::string>(); };
    }
    void bind(const std::string& key, uint64_t* v) {
        setters_[key] = [v](const json& j) { *v = j.get<uint64_t>(); };
    }
    void bind(const std::string& key, bool* v) {
        setters_[key] = [v](const json& j) { *v = j.get<bool>(); };
    }

    void apply(const std::string& path) const {
        if (path.empty()) return;
        std::ifstream is(path);
        if (!is) throw IoError("cannot open config file " + path);
        json j;
        try {
            is >> j;
        } catch (const json::exception& e) {
            throw IoError("config parse error in " + path + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            auto found = setters_.find(it.key());
            if (found == setters_.end())
                throw ConfigError("unknown config key: " + it.key());
            found->second(it.value());
        }
    }

private:
    std::map<std::string, std::function<void(const json&)>> setters_;
};

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw IoError("cannot open " + path + " for writing");
    return file;
}

BlockKind parse_kind(const std::string& s) {
    if (s == "nl") return BlockKind::nl;
    if (s == "snl") return BlockKind::snl;
    if (s == "gc") return BlockKind::gc;
    if (s == "se") return BlockKind::se;
    if (s == "framework") return BlockKind::framework;
    throw ConfigError("unknown block kind: " + s);
}

NlVariant parse_variant(const std::string& s) {
    if (s == "gaussian") return NlVariant::gaussian;
    if (s == "e-gaussian") return NlVariant::e_gaussian;
    if (s == "dot") return NlVariant::dot;
    if (s == "concat") return NlVariant::concat;
    throw ConfigError("unknown nl variant: " + s);
}

void parse_hw(const std::string& s, int& h, int& w) {
    auto x = s.find('x');
    if (x == std::string::npos) throw ConfigError("--hw expects HxW, got " + s);
    try {
        h = std::stoi(s.substr(0, x));
        w = std::stoi(s.substr(x + 1));
    } catch (...) {
        throw ConfigError("--hw expects HxW, got " + s);
    }
    if (h <= 0 || w <= 0) throw ConfigError("--hw dims must be positive");
}

// insertion grammar `kind:slots[:rN]`, slots like c3c4c5 / +1c4 (resnet) or
// s1s2s3 / +1s3 (toy)
struct ParsedInsert {
    BlockSpec block;
    std::vector<std::string> stages;
    bool plus_one = false;
};

ParsedInsert parse_insert(const std::string& text, bool toy) {
    ParsedInsert out;
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() < 2 || parts.size() > 3)
        throw ConfigError("--insert expects kind:slots[:rN], got " + text);

    out.block.kind = parse_kind(parts[0]);
    if (out.block.kind == BlockKind::nl) out.block.variant = NlVariant::e_gaussian;
    out.block.channels = 0;  // filled per slot

    std::string slots = parts[1];
    if (slots.rfind("+1", 0) == 0) {
        out.plus_one = true;
        slots = slots.substr(2);
    }
    char tag = toy ? 's' : 'c';
    size_t i = 0;
    while (i < slots.size()) {
        if (slots[i] != tag || i + 1 >= slots.size() || !isdigit((unsigned char)slots[i + 1]))
            throw ConfigError("bad stage list `" + parts[1] + "` in --insert");
        out.stages.push_back(slots.substr(i, 2));
        i += 2;
    }
    if (out.stages.empty()) throw ConfigError("empty stage list in --insert");
    if (out.plus_one && out.stages.size() != 1)
        throw ConfigError("+1 insertions take exactly one stage");

    if (parts.size() == 3) {
        if (parts[2].empty() || parts[2][0] != 'r')
            throw ConfigError("ratio must look like r16, got " + parts[2]);
        int r = 0;
        try {
            r = std::stoi(parts[2].substr(1));
        } catch (...) {
            throw ConfigError("ratio must look like r16, got " + parts[2]);
        }
        if (out.block.kind == BlockKind::nl) out.block.hidden_ratio = r;
        else out.block.bottleneck_ratio = r;
    }
    return out;
}

InsertPos parse_pos(const std::string& s) {
    if (s == "after1x1") return InsertPos::after1x1;
    if (s == "afterAdd") return InsertPos::afterAdd;
    throw ConfigError("position must be after1x1 or afterAdd, got " + s);
}

// ---------------------------------------------------------------- gradcheck

int run_gradcheck(int nseeds, const std::string& out_path) {
    std::ofstream file;
    std::ostream& os = open_out(out_path, file);
    auto results = gradient_suite(nseeds);
    bool ok = true;
    for (const auto& r : results) {
        char line[160];
        std::snprintf(line, sizeof line, "%-36s max_rel_err %.3e  bound %.0e  %s\n",
                      r.name.c_str(), r.worst, r.bound, r.passed() ? "ok" : "FAIL");
        os << line;
        ok = ok && r.passed();
    }
    os << (ok ? "gradcheck: all passed\n" : "gradcheck: FAILURES\n");
    return ok ? kExitOk : kExitCheckFailed;
}

// -------------------------------------------------------------------- equiv

int run_equiv(const std::string& which, int trials, uint64_t seed,
              const std::string& out_path) {
    std::ofstream file;
    std::ostream& os = open_out(out_path, file);
    std::vector<CheckResult> results;
    if (which == "snl-distributive" || which == "all")
        results.push_back(snl_distributive_check(trials, seed));
    if (which == "framework-gc" || which == "all") results.push_back(framework_gc_check(20));
    if (which == "framework-se" || which == "all") results.push_back(framework_se_check(20));
    if (which == "permutation" || which == "all")
        results.push_back(permutation_equivariance_check(5, 5));
    if (results.empty())
        throw ConfigError("unknown --check: " + which +
                          " (snl-distributive, framework-gc, framework-se, permutation, all)");
    bool ok = true;
    for (const auto& r : results) {
        char line[160];
        std::snprintf(line, sizeof line, "%-28s max_diff %.3e  bound %.0e  %s\n",
                      r.name.c_str(), r.worst, r.bound, r.passed() ? "ok" : "FAIL");
        os << line;
        ok = ok && r.passed();
    }
    return ok ? kExitOk : kExitCheckFailed;
}

// --------------------------------------------------------------------- cost

void print_cost_report(const CostReport& rep, const std::string& format, std::ostream& os) {
    if (format == "json") {
        json j;
        j["convention"] = CostReport::convention();
        j["params"] = rep.params;
        j["macs"] = rep.macs;
        j["params_M"] = rep.params_m();
        j["flops_G"] = rep.gflops();
        j["base_params"] = rep.base_params;
        j["base_macs"] = rep.base_macs;
        j["insertions"] = json::array();
        for (const auto& ic : rep.per_insertion)
            j["insertions"].push_back(
                {{"label", ic.label}, {"params", ic.params}, {"macs", ic.macs}});
        os << j.dump(2) << "\n";
        return;
    }
    char buf[256];
    if (format == "csv") {
        os << "# convention: " << CostReport::convention() << "\n";
        os << "section,label,params,macs\n";
        std::snprintf(buf, sizeof buf, "total,,%lld,%lld\n", rep.params, rep.macs);
        os << buf;
        std::snprintf(buf, sizeof buf, "base,,%lld,%lld\n", rep.base_params, rep.base_macs);
        os << buf;
        for (const auto& ic : rep.per_insertion) {
            std::snprintf(buf, sizeof buf, "insertion,%s,%lld,%lld\n", ic.label.c_str(),
                          ic.params, ic.macs);
            os << buf;
        }
        return;
    }
    os << "convention: " << CostReport::convention() << "\n";
    std::snprintf(buf, sizeof buf, "%-18s %14s %12s %14s %10s\n", "", "params", "params(M)",
                  "macs", "flops(G)");
    os << buf;
    std::snprintf(buf, sizeof buf, "%-18s %14lld %12.2f %14lld %10.2f\n", "total", rep.params,
                  rep.params_m(), rep.macs, rep.gflops());
    os << buf;
    std::snprintf(buf, sizeof buf, "%-18s %14lld %12.2f %14lld %10.2f\n", "base",
                  rep.base_params, double(rep.base_params) / 1e6, rep.base_macs,
                  double(rep.base_macs) / 1e9);
    os << buf;
    for (const auto& ic : rep.per_insertion) {
        std::snprintf(buf, sizeof buf, "  + %-14s %14lld %12.2f %14lld %10.2f\n",
                      ic.label.c_str(), ic.params, double(ic.params) / 1e6, ic.macs,
                      double(ic.macs) / 1e9);
        os << buf;
    }
}

int run_cost(const std::string& arch, const std::string& insert, const std::string& pos,
             bool table7a, const std::string& format, const std::string& out_path) {
    if (arch != "resnet50") throw ConfigError("unknown --arch: " + arch);
    ArchDescriptor base = describe_resnet50();
    std::ofstream file;
    std::ostream& os = open_out(out_path, file);

    if (table7a) {
        struct RowSpec {
            const char* label;
            const char* insert;  // empty = baseline
        };
        const RowSpec rows[] = {{"baseline", ""},
                                {"+1NL", "nl:+1c4:r2"},
                                {"+1SNL", "snl:+1c4"},
                                {"+1GC", "gc:+1c4:r16"},
                                {"+all GC", "gc:c3c4c5:r16"}};
        os << "# convention: " << CostReport::convention() << "\n";
        os << "label,params_M,flops_G\n";
        for (const auto& row : rows) {
            ArchDescriptor arch_i = base;
            if (row.insert[0] != '\0') {
                ParsedInsert pi = parse_insert(row.insert, false);
                arch_i = insert_blocks(base, {{pi.stages, pi.plus_one,
                                               InsertPos::after1x1, pi.block}});
            }
            CostReport rep = count_cost(arch_i);
            char buf[128];
            std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f\n", row.label, rep.params_m(),
                          rep.gflops());
            os << buf;
        }
        return kExitOk;
    }

    ArchDescriptor arch_d = base;
    if (!insert.empty()) {
        ParsedInsert pi = parse_insert(insert, false);
        arch_d = insert_blocks(base, {{pi.stages, pi.plus_one, parse_pos(pos), pi.block}});
    }
    print_cost_report(count_cost(arch_d), format, os);
    return kExitOk;
}

// -------------------------------------------------------------------- stats

int run_stats(const std::string& block, const std::string& variant, int channels,
              const std::string& hw, int ratio, int hidden_ratio,
              const std::string& probes_csv, const std::string& input_path, uint64_t seed,
              const std::string& out_path) {
    BlockSpec spec;
    spec.kind = parse_kind(block);
    spec.channels = channels;
    if (spec.kind == BlockKind::nl) {
        spec.variant = parse_variant(variant.empty() ? "e-gaussian" : variant);
        spec.hidden_ratio = hidden_ratio;
    }
    spec.bottleneck_ratio = ratio;
    spec.validate();

    int h = 0, w = 0;
    parse_hw(hw, h, w);

    Tensor input;
    if (!input_path.empty()) {
        input = read_tensor_file(input_path);
        if (input.rank() != 4 || input.dim(0) != 1 || input.dim(1) != channels ||
            input.dim(2) != h || input.dim(3) != w)
            throw ConfigError("--input tensor must have shape [1," +
                              std::to_string(channels) + "," + std::to_string(h) + "," +
                              std::to_string(w) + "], got " + shape_str(input.shape()));
    } else {
        input = rng_tensor(CounterRng::derive(seed, "stats-input"), {1, channels, h, w},
                           Normal{0.0, 1.0});
    }

    std::vector<std::string> probes;
    std::stringstream ss(probes_csv);
    std::string item;
    while (std::getline(ss, item, ',')) probes.push_back(item);
    if (probes.empty()) probes = kAllProbes;

    StatsReport rep = probe_stats(spec, seed, input, probes);
    std::ofstream file;
    std::ostream& os = open_out(out_path, file);
    rep.write_csv(os);
    return kExitOk;
}

// -------------------------------------------------------------- attn-export

int run_attn_export(const std::string& block, const std::string& variant, int channels,
                    const std::string& hw, int ratio, int hidden_ratio, int query,
                    uint64_t seed, const std::string& out_prefix) {
    if (out_prefix.empty()) throw ConfigError("attn-export requires --out PREFIX");
    BlockSpec spec;
    spec.kind = parse_kind(block);
    spec.channels = channels;
    if (spec.kind == BlockKind::nl) {
        spec.variant = parse_variant(variant.empty() ? "e-gaussian" : variant);
        spec.hidden_ratio = hidden_ratio;
    }
    spec.bottleneck_ratio = ratio;
    spec.validate();
    int h = 0, w = 0;
    parse_hw(hw, h, w);

    BlockParams bp = build_block(spec, seed);
    Tensor x = rng_tensor(CounterRng::derive(seed, "attn-input"), {1, channels, h, w},
                          Normal{0.0, 1.0});
    AttentionMap map = attention_map(bp, x);
    std::vector<double> row;
    if (map.global) {
        row.assign(map.weights.begin(), map.weights.end());
    } else {
        if (query < 0 || query >= map.np)
            throw ConfigError("--query must be in [0, " + std::to_string(map.np) + ")");
        row.assign(map.row(query), map.row(query) + map.np);
    }
    export_heatmap_csv(row, h, w, out_prefix + ".csv");
    export_heatmap_pgm(row, h, w, out_prefix + ".pgm");
    std::cout << "wrote " << out_prefix << ".csv and " << out_prefix << ".pgm ("
              << (map.global ? "global map" : "query " + std::to_string(query)) << ")\n";
    return kExitOk;
}

// -------------------------------------------------------------------- train

int run_train(const std::string& insert, const std::string& pos, int epochs, int samples,
              int classes, double density, double lr, double momentum, double weight_decay,
              int batch_size, uint64_t seed, const std::string& widths_csv,
              const std::string& out_path) {
    ToyDatasetSpec ds;
    ds.seed = seed;
    ds.num_samples = samples;
    ds.num_classes = classes;
    ds.density = density;
    ToyDataset data = gen_dataset(ds);

    ToyNetSpec ns;
    ns.num_classes = classes;
    if (!widths_csv.empty()) {
        ns.stage_widths.clear();
        std::stringstream ss(widths_csv);
        std::string item;
        while (std::getline(ss, item, ','))
            ns.stage_widths.push_back(std::stoi(item));
    }
    if (!insert.empty()) {
        ParsedInsert pi = parse_insert(insert, true);
        ToyInsertPlanItem item;
        for (const auto& sname : pi.stages)
            item.stages.push_back(sname[1] - '1');
        item.plus_one = pi.plus_one;
        item.pos = parse_pos(pos);
        item.block = pi.block;
        ns.insertions = expand_toy_plan(ns, {item});
    }
    ToyNet net = build_net(ns, seed);

    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.momentum = momentum;
    cfg.weight_decay = weight_decay;
    cfg.batch_size = batch_size;
    cfg.shuffle_seed = CounterRng::derive(seed, "shuffle-root");
    auto history = train(net, data, cfg);

    std::ofstream file;
    std::ostream& os = open_out(out_path, file);
    write_metrics_csv(history, os);
    std::fprintf(stderr, "final train_loss %.6f test_acc %.4f\n", history.back().train_loss,
                 history.back().test_acc);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale laboratory for global-context blocks"};
    app.require_subcommand(1);

    // shared flags, rebound per subcommand
    uint64_t seed = 0;
    std::string out_path, format = "table", config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "PRNG seed (default 0)");
        sub->add_option("--out", out_path, "output file (default stdout)");
        sub->add_option("--format", format, "table|csv|json")
            ->check(CLI::IsMember({"table", "csv", "json"}));
        sub->add_option("--config", config_path, "JSON file overriding flags");
    };

    // gradcheck
    auto* sc_grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    int grad_seeds = 10;
    sc_grad->add_option("--seeds", grad_seeds, "seeds per item (default 10)");
    add_common(sc_grad);

    // equiv
    auto* sc_equiv = app.add_subcommand("equiv", "algebraic equivalence checks");
    std::string equiv_check = "all";
    int equiv_trials = 100;
    sc_equiv->add_option("--check", equiv_check,
                         "snl-distributive|framework-gc|framework-se|permutation|all");
    sc_equiv->add_option("--trials", equiv_trials, "random trials (default 100)");
    add_common(sc_equiv);

    // cost
    auto* sc_cost = app.add_subcommand("cost", "parameter / FLOP reports");
    std::string cost_arch = "resnet50", cost_insert, cost_pos = "after1x1";
    bool table7a = false;
    sc_cost->add_option("--arch", cost_arch, "architecture (resnet50)");
    sc_cost->add_option("--insert", cost_insert, "kind:slots[:rN], e.g. gc:c3c4c5:r16");
    sc_cost->add_option("--pos", cost_pos, "after1x1|afterAdd");
    sc_cost->add_flag("--table7a", table7a, "print the five block-design configurations");
    add_common(sc_cost);

    // stats
    auto* sc_stats = app.add_subcommand("stats", "avg_dist probe statistics");
    std::string st_block = "nl", st_variant, st_hw = "6x6", st_probes, st_input;
    int st_channels = 8, st_ratio = 16, st_hidden = 2;
    sc_stats->add_option("--block", st_block, "nl|snl|gc|se|framework");
    sc_stats->add_option("--variant", st_variant, "gaussian|e-gaussian|dot|concat");
    sc_stats->add_option("--channels", st_channels, "channel count");
    sc_stats->add_option("--hw", st_hw, "spatial size HxW");
    sc_stats->add_option("--r", st_ratio, "bottleneck ratio (default 16)");
    sc_stats->add_option("--hidden-ratio", st_hidden, "nl hidden ratio (default 2)");
    sc_stats->add_option("--probes", st_probes, "comma list of input,key,query,prod,att,output");
    sc_stats->add_option("--input", st_input, "tensor file instead of a seeded random input");
    add_common(sc_stats);

    // attn-export
    auto* sc_attn = app.add_subcommand("attn-export", "heatmap CSV + PGM export");
    std::string at_block = "nl", at_variant, at_hw = "6x6";
    int at_channels = 8, at_ratio = 16, at_hidden = 2, at_query = 0;
    sc_attn->add_option("--block", at_block, "nl|snl|gc|se|framework");
    sc_attn->add_option("--variant", at_variant, "gaussian|e-gaussian|dot|concat");
    sc_attn->add_option("--channels", at_channels, "channel count");
    sc_attn->add_option("--hw", at_hw, "spatial size HxW");
    sc_attn->add_option("--r", at_ratio, "bottleneck ratio");
    sc_attn->add_option("--hidden-ratio", at_hidden, "nl hidden ratio");
    sc_attn->add_option("--query", at_query, "query position for per-query maps");
    add_common(sc_attn);

    // train
    auto* sc_train = app.add_subcommand("train", "toy global-majority training");
    std::string tr_insert, tr_pos = "after1x1", tr_widths = "12";
    int tr_epochs = 16, tr_samples = 240, tr_classes = 4, tr_batch = 32;
    double tr_density = 0.6, tr_lr = 0.03, tr_momentum = 0.9, tr_wd = 1e-4;
    sc_train->add_option("--insert", tr_insert, "kind:slots[:rN], e.g. gc:s1s2s3:r4");
    sc_train->add_option("--pos", tr_pos, "after1x1|afterAdd");
    sc_train->add_option("--epochs", tr_epochs, "training epochs");
    sc_train->add_option("--samples", tr_samples, "dataset size (80/20 split)");
    sc_train->add_option("--classes", tr_classes, "number of classes");
    sc_train->add_option("--density", tr_density, "colored pixel fraction");
    sc_train->add_option("--lr", tr_lr, "learning rate");
    sc_train->add_option("--momentum", tr_momentum, "SGD momentum");
    sc_train->add_option("--weight-decay", tr_wd, "weight decay");
    sc_train->add_option("--batch-size", tr_batch, "batch size");
    sc_train->add_option("--widths", tr_widths, "stage widths (default 12; full trunk: 16,32,64)");
    add_common(sc_train);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        ConfigOverride cfg;
        cfg.bind("seed", &seed);
        cfg.bind("out", &out_path);
        cfg.bind("format", &format);
        if (sc_grad->parsed()) {
            cfg.bind("seeds", &grad_seeds);
            cfg.apply(config_path);
            return run_gradcheck(grad_seeds, out_path);
        }
        if (sc_equiv->parsed()) {
            cfg.bind("check", &equiv_check);
            cfg.bind("trials", &equiv_trials);
            cfg.apply(config_path);
            return run_equiv(equiv_check, equiv_trials, seed, out_path);
        }
        if (sc_cost->parsed()) {
            cfg.bind("arch", &cost_arch);
            cfg.bind("insert", &cost_insert);
            cfg.bind("pos", &cost_pos);
            cfg.bind("table7a", &table7a);
            cfg.apply(config_path);
            return run_cost(cost_arch, cost_insert, cost_pos, table7a, format, out_path);
        }
        if (sc_stats->parsed()) {
            cfg.bind("block", &st_block);
            cfg.bind("variant", &st_variant);
            cfg.bind("channels", &st_channels);
            cfg.bind("hw", &st_hw);
            cfg.bind("r", &st_ratio);
            cfg.bind("hidden-ratio", &st_hidden);
            cfg.bind("probes", &st_probes);
            cfg.bind("input", &st_input);
            cfg.apply(config_path);
            return run_stats(st_block, st_variant, st_channels, st_hw, st_ratio, st_hidden,
                             st_probes, st_input, seed, out_path);
        }
        if (sc_attn->parsed()) {
            cfg.bind("block", &at_block);
            cfg.bind("variant", &at_variant);
            cfg.bind("channels", &at_channels);
            cfg.bind("hw", &at_hw);
            cfg.bind("r", &at_ratio);
            cfg.bind("hidden-ratio", &at_hidden);
            cfg.bind("query", &at_query);
            cfg.apply(config_path);
            return run_attn_export(at_block, at_variant, at_channels, at_hw, at_ratio,
                                   at_hidden, at_query, seed, out_path);
        }
        if (sc_train->parsed()) {
            cfg.bind("insert", &tr_insert);
            cfg.bind("pos", &tr_pos);
            cfg.bind("epochs", &tr_epochs);
            cfg.bind("samples", &tr_samples);
            cfg.bind("classes", &tr_classes);
            cfg.bind("density", &tr_density);
            cfg.bind("lr", &tr_lr);
            cfg.bind("momentum", &tr_momentum);
            cfg.bind("weight-decay", &tr_wd);
            cfg.bind("batch-size", &tr_batch);
            cfg.bind("widths", &tr_widths);
            cfg.apply(config_path);
            return run_train(tr_insert, tr_pos, tr_epochs, tr_samples, tr_classes, tr_density,
                             tr_lr, tr_momentum, tr_wd, tr_batch, seed, tr_widths, out_path);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return kExitUsage;
}
