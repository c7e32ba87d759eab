#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gctx/blocks.hpp"

namespace gctx {

struct CheckResult {
    std::string name;
    double worst = 0.0;   // max relative error or max element-wise diff
    double bound = 0.0;
    bool passed() const { return worst < bound; }
};

// Finite-difference gradient checks for every differentiable op and every
// block kind, over `nseeds` seeds each; bound 1e-5.
std::vector<CheckResult> gradient_suite(int nseeds);

// max |pre - post| for the two simplified-block forms over `trials` random
// (seed, C, H, W) configurations; bound 1e-10.
CheckResult snl_distributive_check(int trials, uint64_t seed0 = 0);

// gc and se against their framework compositions over `nseeds` seeds;
// bound 1e-12.
CheckResult framework_gc_check(int nseeds);
CheckResult framework_se_check(int nseeds);

// all block kinds under random spatial permutations; bound 1e-10.
CheckResult permutation_equivariance_check(int nperms, int nseeds);

}  // namespace gctx
