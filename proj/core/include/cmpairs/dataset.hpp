#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cmpairs {

/// One observed unit: Y_{i,g} for unit i of cluster g.
struct UnitRow {
    std::string cluster_id;
    std::string unit_id;
    double outcome = 0.0;
};

/// Observed data for one cluster: sampled outcomes, true size N_g,
/// baseline covariates X_g and (once assigned) treatment D_g.
struct ClusterRecord {
    std::string cluster_id;
    std::int64_t n_total = 0;
    std::vector<double> sampled_outcomes;
    std::vector<double> covariates;
    std::optional<int> treatment;

    bool operator==(const ClusterRecord&) const = default;
};

/// Cluster-level view consumed by matching, estimation and inference.
/// Design-stage summaries (see read_cluster_table) have n_sampled == 0 and
/// a NaN ybar.
struct ClusterSummary {
    std::string cluster_id;
    std::int64_t n_total = 0;
    std::int64_t n_sampled = 0;
    double ybar = 0.0;
    std::vector<double> covariates;
    std::optional<int> treatment;
};

/// A validated sample of 2G clusters ordered by cluster_id.
struct Dataset {
    std::vector<ClusterRecord> clusters;
    std::size_t covariate_dim = 0;

    std::size_t cluster_count() const noexcept { return clusters.size(); }
    std::size_t pair_count() const noexcept { return clusters.size() / 2; }
    bool has_treatments() const noexcept;

    bool operator==(const Dataset&) const = default;
};

/// Validates clusters and returns them stably sorted by cluster_id.
/// Throws Error with odd_cluster_count, empty_cluster, sample_exceeds_size,
/// ragged_covariates, non_binary_treatment, missing_treatment,
/// non_finite_value or duplicate_cluster.
Dataset make_dataset(std::vector<ClusterRecord> clusters);

/// Reads the units CSV (cluster_id,unit_id,outcome) and the clusters CSV
/// (cluster_id,n_total,x1..xk[,treatment]) and builds a validated Dataset.
/// Unit outcomes keep their input row order within each cluster.
Dataset load_dataset(std::istream& units, std::istream& clusters);

/// Parses only the clusters CSV, for design-stage work (matching before
/// outcomes exist). Rows are sorted by cluster_id.
std::vector<ClusterSummary> read_cluster_table(std::istream& clusters);

std::vector<ClusterSummary> summarize(const Dataset& dataset);

/// Treatment vector of the summaries; throws missing_treatment if any
/// cluster is unassigned.
std::vector<int> treatments_of(std::span<const ClusterSummary> summaries);

/// Copy of the dataset with treatments replaced.
Dataset with_treatments(Dataset dataset, std::span<const int> treatments);

void write_units_csv(std::ostream& out, const Dataset& dataset);
void write_clusters_csv(std::ostream& out, const Dataset& dataset);
/// Writes summaries in the clusters CSV schema (treatment column only when
/// every summary carries one).
void write_cluster_table(std::ostream& out, std::span<const ClusterSummary> summaries);

}  // namespace cmpairs
