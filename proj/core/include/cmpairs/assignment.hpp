#pragma once

#include <cstdint>
#include <vector>

#include "cmpairs/matching.hpp"

namespace cmpairs {

struct AssignmentSeed {
    std::uint64_t seed = 0;
};

/// Treatment vector indexed by cluster (length 2G): in every pair exactly one
/// member is treated, chosen by an independent fair coin. The coin of pair j
/// is the first output of CounterRng(seed, j), so the result depends only on
/// (design, seed).
std::vector<int> assign_within_pairs(const MatchedDesign& design, AssignmentSeed seed);

}  // namespace cmpairs
