#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gctx/blocks.hpp"
#include "gctx/tensor.hpp"

namespace gctx {

// (1 - cos(u, v)) / 2, in [0, 1]. Zero vectors: both zero -> 0, exactly one
// zero -> 0.5 (cos taken as 1 resp. 0), keeping the distance total and
// symmetric.
double cosine_distance(const double* u, const double* v, int n);
double cosine_distance(const std::vector<double>& u, const std::vector<double>& v);

// Mean cosine distance over all np^2 ordered pairs (i = j included),
// Gram-matrix based. rows: [np, d].
double avg_dist(const Tensor& rows);
double avg_dist(const double* rows, int np, int d);

struct StatsRow {
    std::string block;
    std::string variant;  // "-" when not applicable
    std::string probe;
    std::optional<double> value;  // absent when the probe is undefined for the block
};

struct StatsReport {
    std::vector<StatsRow> rows;
    int np = 0, channels = 0;
    uint64_t seed = 0;

    // header `block,variant,probe,avg_dist,np,c,seed`; 12 significant digits;
    // absent probes print `-`
    void write_csv(std::ostream& os) const;
};

extern const std::vector<std::string> kAllProbes;  // input,key,query,prod,att,output
std::vector<std::string> valid_probes(const BlockSpec& spec);

// One forward pass with trace capture; avg_dist per requested probe. Probes
// the block does not compute are reported absent.
StatsReport probe_stats(const BlockSpec& spec, uint64_t seed, const Tensor& input,
                        const std::vector<std::string>& probes);

// Heatmap export for one attention row (or a global alpha) of length h*w.
// CSV: h rows by w columns of raw values. PGM (`P2`): min-max scaled to
// 0..255; constant maps go to all zeros.
void export_heatmap_csv(const std::vector<double>& map, int h, int w, const std::string& path);
void export_heatmap_pgm(const std::vector<double>& map, int h, int w, const std::string& path);

}  // namespace gctx
