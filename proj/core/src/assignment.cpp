#include "cmpairs/assignment.hpp"

#include "cmpairs/random.hpp"

namespace cmpairs {

std::vector<int> assign_within_pairs(const MatchedDesign& design, AssignmentSeed seed) {
    validate_design(design, design.permutation.size());
    std::vector<int> d(design.permutation.size(), 0);
    for (std::size_t j = 0; j < design.pair_count(); ++j) {
        CounterRng rng(seed.seed, j);
        const auto [first, second] = design.pair(j);
        d[rng.coin() ? first : second] = 1;
    }
    return d;
}

}  // namespace cmpairs
