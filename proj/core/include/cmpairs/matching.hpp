#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "cmpairs/dataset.hpp"

namespace cmpairs {

/// Which cluster characteristics a matcher looks at: a subset of the
/// covariates X_g, optionally followed by the cluster size N_g.
struct FeatureSelector {
    std::vector<std::size_t> covariates;
    bool include_size = false;

    std::size_t dimension() const noexcept { return covariates.size() + (include_size ? 1 : 0); }

    static FeatureSelector covariate(std::size_t index) { return {{index}, false}; }
    static FeatureSelector size_only() { return {{}, true}; }
    static FeatureSelector all_covariates(std::size_t k, bool include_size);

    bool operator==(const FeatureSelector&) const = default;
};

enum class MatchMethod { sorted_scalar, greedy_nn };

/// Pairs {permutation[2j], permutation[2j + 1]} for j = 0..G-1.
struct MatchedDesign {
    std::vector<std::size_t> permutation;
    bool matched_on_size = false;
    MatchMethod method = MatchMethod::sorted_scalar;
    FeatureSelector features;

    std::size_t pair_count() const noexcept { return permutation.size() / 2; }
    std::pair<std::size_t, std::size_t> pair(std::size_t j) const {
        return {permutation[2 * j], permutation[2 * j + 1]};
    }

    bool operator==(const MatchedDesign&) const = default;
};

/// Throws Error(invalid_design) unless the permutation is a bijection on
/// {0, ..., cluster_count - 1} with cluster_count even.
void validate_design(const MatchedDesign& design, std::size_t cluster_count);

/// Raw (unscaled) feature vector of one cluster.
std::vector<double> feature_vector(const ClusterSummary& summary, const FeatureSelector& features);

/// Sorts clusters by a scalar key (ties by cluster_id) and pairs neighbours.
/// Throws non_scalar_key when `key` does not select exactly one feature.
MatchedDesign pair_sorted_scalar(std::span<const ClusterSummary> summaries,
                                 const FeatureSelector& key);

/// Greedy nearest-neighbour pairing on coordinate-wise z-scored features
/// (N appended when features.include_size). The unmatched cluster with the
/// smallest cluster_id is paired with its nearest unmatched neighbour in
/// Euclidean distance, ties broken by cluster_id. A zero-variance coordinate
/// is centred but not scaled.
MatchedDesign pair_greedy_nn(std::span<const ClusterSummary> summaries,
                             const FeatureSelector& features);

/// Reorders pairs so that consecutive pairs (the pairs-of-pairs used by the
/// variance estimator) are close. For one-dimensional features pairs are
/// sorted by their mean key (z-scored for greedy designs, raw for sorted
/// designs). For multivariate features pairs are themselves greedily matched
/// on their z-scored midpoints and the resulting pairs-of-pairs laid out
/// consecutively; with odd G the unmatched pair goes last. Member order
/// within each pair is preserved.
MatchedDesign order_pairs_for_variance(const MatchedDesign& design,
                                       std::span<const ClusterSummary> summaries);

struct ImbalanceReport {
    /// (r, ell) -> (1/G) sum_g N^ell_{second member} |V_second - V_first|^r.
    /// V is W = (X, N) when matched on size, otherwise X and ell = 0 only.
    std::map<std::pair<int, int>, double> pair_discrepancies;
    /// Same sums with N^ell replaced by the member average (N^ell_a + N^ell_b) / 2.
    std::map<std::pair<int, int>, double> pair_discrepancies_symmetrized;
    /// (k, l) -> (1/G) sum_{j <= G/2} w |V_{4j-k} - V_{4j-l}|^2 in 1-based
    /// positions, k in {2, 3}, l in {0, 1}; w = N^2_{4j-k} when matched on size.
    std::map<std::pair<int, int>, double> popo_discrepancies;
    /// r -> (1/G) sum_g |V_second - V_first|^r for r = 1..4.
    std::map<int, double> fourth_moment_sums;
    bool matched_on_size = false;
};

ImbalanceReport imbalance_report(const MatchedDesign& design,
                                 std::span<const ClusterSummary> summaries);

}  // namespace cmpairs

namespace cmpairs {

/// Writes `pair_index,position,cluster_id` rows, one per cluster, in pair order.
void write_design_csv(std::ostream& out, const MatchedDesign& design,
                      std::span<const ClusterSummary> summaries);

/// Reads a design CSV against clusters identified by `cluster_ids` (the
/// dataset order). Pairs are taken in increasing pair_index. The file does
/// not record how pairs were formed; `features` is attached to the design
/// for diagnostics and matched_on_size is features.include_size.
/// Throws invalid_design, unknown_cluster or parse_error.
MatchedDesign read_design_csv(std::istream& in, std::span<const std::string> cluster_ids,
                              const FeatureSelector& features = {});

}  // namespace cmpairs
