#include "gctx/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "gctx/kernels.hpp"

namespace gctx {

namespace {

double cos_from_parts(double dot, double nu, double nv) {
    if (nu == 0.0 && nv == 0.0) return 1.0;
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

}  // namespace

double cosine_distance(const double* u, const double* v, int n) {
    double dot = 0.0, su = 0.0, sv = 0.0;
    for (int i = 0; i < n; ++i) {
        dot += u[i] * v[i];
        su += u[i] * u[i];
        sv += v[i] * v[i];
    }
    return (1.0 - cos_from_parts(dot, std::sqrt(su), std::sqrt(sv))) / 2.0;
}

double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size())
        throw ShapeError("cosine_distance length mismatch: " + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()));
    return cosine_distance(u.data(), v.data(), int(u.size()));
}

double avg_dist(const double* rows, int np, int d) {
    if (np < 1) throw ContractError("avg_dist needs at least one vector");
    std::vector<double> g(size_t(np) * np, 0.0);
    kernels::gram(rows, g.data(), np, d);
    std::vector<double> norm(size_t(np), 0.0);
    for (int i = 0; i < np; ++i) norm[size_t(i)] = std::sqrt(g[size_t(i) * np + i]);
    double total = 0.0;
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j)
            total += (1.0 - cos_from_parts(g[size_t(i) * np + j], norm[size_t(i)], norm[size_t(j)])) / 2.0;
    return total / (double(np) * np);
}

double avg_dist(const Tensor& rows) {
    if (rows.rank() != 2) throw ShapeError("avg_dist expects [np, d], got " + shape_str(rows.shape()));
    return avg_dist(rows.data(), rows.dim(0), rows.dim(1));
}

const std::vector<std::string> kAllProbes = {"input", "key", "query", "prod", "att", "output"};

std::vector<std::string> valid_probes(const BlockSpec& spec) {
    switch (spec.kind) {
        case BlockKind::nl:
            if (spec.variant == NlVariant::e_gaussian || spec.variant == NlVariant::dot)
                return {"input", "key", "query", "prod", "att", "output"};
            return {"input", "prod", "att", "output"};  // gaussian / concat
        case BlockKind::snl:
        case BlockKind::gc:
            return {"input", "key", "att", "output"};
        case BlockKind::se:
            return {"input", "att", "output"};
        case BlockKind::framework:
            if (spec.pooling == Pooling::att) return {"input", "key", "att", "output"};
            return {"input", "att", "output"};
    }
    return {};
}

StatsReport probe_stats(const BlockSpec& spec, uint64_t seed, const Tensor& input,
                        const std::vector<std::string>& probes) {
    spec.validate();
    for (const auto& p : probes)
        if (std::find(kAllProbes.begin(), kAllProbes.end(), p) == kAllProbes.end())
            throw ConfigError("unknown probe: " + p);
    BlockParams bp = build_block(spec, seed);
    ProbeTrace trace;
    block_forward(bp, input, nullptr, &trace);

    auto valid = valid_probes(spec);
    StatsReport rep;
    rep.np = input.dim(2) * input.dim(3);
    rep.channels = spec.channels;
    rep.seed = seed;
    for (const auto& name : probes) {
        StatsRow row;
        row.block = to_string(spec.kind);
        row.variant = spec.kind == BlockKind::nl ? to_string(spec.variant) : "-";
        row.probe = name;
        bool ok = std::find(valid.begin(), valid.end(), name) != valid.end();
        if (ok) {
            if (name == "input") row.value = avg_dist(*trace.input);
            else if (name == "key") row.value = avg_dist(*trace.key);
            else if (name == "query") row.value = avg_dist(*trace.query);
            else if (name == "prod") row.value = avg_dist(*trace.prod);
            else if (name == "att") row.value = avg_dist(trace.att->per_query_matrix());
            else row.value = avg_dist(*trace.output);
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

void StatsReport::write_csv(std::ostream& os) const {
    os << "block,variant,probe,avg_dist,np,c,seed\n";
    char buf[48];
    for (const auto& r : rows) {
        if (r.value) {
            std::snprintf(buf, sizeof buf, "%.12g", *r.value);
        } else {
            std::snprintf(buf, sizeof buf, "-");
        }
        os << r.block << "," << r.variant << "," << r.probe << "," << buf << "," << np << ","
           << channels << "," << seed << "\n";
    }
}

void export_heatmap_csv(const std::vector<double>& map, int h, int w, const std::string& path) {
    if (int64_t(map.size()) != int64_t(h) * w)
        throw ShapeError("heatmap length " + std::to_string(map.size()) + " != " +
                         std::to_string(h) + "x" + std::to_string(w));
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    char buf[48];
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", map[size_t(r) * w + c]);
            os << buf << (c + 1 == w ? "\n" : ",");
        }
    }
    if (!os) throw IoError("write failed for " + path);
}

void export_heatmap_pgm(const std::vector<double>& map, int h, int w, const std::string& path) {
    if (int64_t(map.size()) != int64_t(h) * w)
        throw ShapeError("heatmap length " + std::to_string(map.size()) + " != " +
                         std::to_string(h) + "x" + std::to_string(w));
    double lo = map[0], hi = map[0];
    for (double v : map) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "P2\n" << w << " " << h << "\n255\n";
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            int v = 0;
            if (hi > lo)
                v = int(std::lround((map[size_t(r) * w + c] - lo) / (hi - lo) * 255.0));
            os << v << (c + 1 == w ? "\n" : " ");
        }
    }
    if (!os) throw IoError("write failed for " + path);
}

}  // namespace gctx
