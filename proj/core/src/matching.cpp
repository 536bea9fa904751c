#include "cmpairs/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "cmpairs/csv.hpp"
#include "cmpairs/error.hpp"

namespace cmpairs {

namespace {

void require_pairs(std::size_t cluster_count) {
    if (cluster_count < 4 || cluster_count % 2 != 0) {
        throw Error(Errc::too_few_pairs,
                    "matching needs an even number of at least 4 clusters, got " +
                        std::to_string(cluster_count));
    }
}

/// Row-major n x dim matrix of raw features.
std::vector<double> feature_matrix(std::span<const ClusterSummary> summaries,
                                   const FeatureSelector& features) {
    const std::size_t dim = features.dimension();
    std::vector<double> m;
    m.reserve(summaries.size() * dim);
    for (const auto& s : summaries) {
        for (double v : feature_vector(s, features)) {
            if (!std::isfinite(v)) {
                throw Error(Errc::non_finite_value,
                            "feature of cluster '" + s.cluster_id + "' is not finite");
            }
            m.push_back(v);
        }
    }
    return m;
}

/// Coordinate-wise z-scoring in place (population sd).
void zscore(std::vector<double>& m, std::size_t n, std::size_t dim) {
    for (std::size_t c = 0; c < dim; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += m[i * dim + c];
        }
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = m[i * dim + c] - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            m[i * dim + c] = (m[i * dim + c] - mean) * scale;
        }
    }
}

double squared_distance(const double* a, const double* b, std::size_t dim) noexcept {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        const double d = a[c] - b[c];
        s += d * d;
    }
    return s;
}

/// Greedy nearest-neighbour pairing of `n` points; `less_id(i, j)` orders
/// points for seeding and tie-breaking. Returns the flat pair list; when n is
/// odd the last entry is the unmatched point.
template <class LessId>
std::vector<std::size_t> greedy_pairs(const std::vector<double>& points, std::size_t n,
                                      std::size_t dim, LessId less_id) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), less_id);

    std::vector<char> matched(n, 0);
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t seed : order) {
        if (matched[seed]) {
            continue;
        }
        matched[seed] = 1;
        std::size_t best = n;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t cand : order) {
            if (matched[cand]) {
                continue;
            }
            const double d = squared_distance(&points[seed * dim], &points[cand * dim], dim);
            // `order` is id-sorted, so strict < keeps the smallest id on ties.
            if (d < best_d) {
                best_d = d;
                best = cand;
            }
        }
        out.push_back(seed);
        if (best == n) {
            break;
        }
        matched[best] = 1;
        out.push_back(best);
    }
    return out;
}

}  // namespace

FeatureSelector FeatureSelector::all_covariates(std::size_t k, bool include_size) {
    FeatureSelector f;
    f.covariates.resize(k);
    std::iota(f.covariates.begin(), f.covariates.end(), std::size_t{0});
    f.include_size = include_size;
    return f;
}

void validate_design(const MatchedDesign& design, std::size_t cluster_count) {
    if (design.permutation.size() != cluster_count || cluster_count % 2 != 0) {
        throw Error(Errc::invalid_design, "design lists " + std::to_string(design.permutation.size()) +
                                              " clusters, dataset has " +
                                              std::to_string(cluster_count));
    }
    std::vector<char> seen(cluster_count, 0);
    for (std::size_t idx : design.permutation) {
        if (idx >= cluster_count || seen[idx]) {
            throw Error(Errc::invalid_design, "design permutation is not a bijection");
        }
        seen[idx] = 1;
    }
}

std::vector<double> feature_vector(const ClusterSummary& summary, const FeatureSelector& features) {
    std::vector<double> v;
    v.reserve(features.dimension());
    for (std::size_t j : features.covariates) {
        if (j >= summary.covariates.size()) {
            throw Error(Errc::invalid_argument, "covariate index " + std::to_string(j) +
                                                    " out of range for cluster '" +
                                                    summary.cluster_id + "'");
        }
        v.push_back(summary.covariates[j]);
    }
    if (features.include_size) {
        v.push_back(static_cast<double>(summary.n_total));
    }
    return v;
}

MatchedDesign pair_sorted_scalar(std::span<const ClusterSummary> summaries,
                                 const FeatureSelector& key) {
    if (key.dimension() != 1) {
        throw Error(Errc::non_scalar_key, "sorted matching needs a one-dimensional key, got " +
                                              std::to_string(key.dimension()) + " features");
    }
    require_pairs(summaries.size());
    const std::vector<double> keys = feature_matrix(summaries, key);

    std::vector<std::size_t> order(summaries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) {
            return keys[a] < keys[b];
        }
        return summaries[a].cluster_id < summaries[b].cluster_id;
    });
    return MatchedDesign{std::move(order), key.include_size, MatchMethod::sorted_scalar, key};
}

MatchedDesign pair_greedy_nn(std::span<const ClusterSummary> summaries,
                             const FeatureSelector& features) {
    if (features.dimension() == 0) {
        throw Error(Errc::invalid_argument, "nearest-neighbour matching needs at least one feature");
    }
    require_pairs(summaries.size());
    const std::size_t n = summaries.size();
    const std::size_t dim = features.dimension();
    std::vector<double> points = feature_matrix(summaries, features);
    zscore(points, n, dim);

    auto perm = greedy_pairs(points, n, dim, [&](std::size_t a, std::size_t b) {
        return summaries[a].cluster_id < summaries[b].cluster_id;
    });
    return MatchedDesign{std::move(perm), features.include_size, MatchMethod::greedy_nn, features};
}

MatchedDesign order_pairs_for_variance(const MatchedDesign& design,
                                       std::span<const ClusterSummary> summaries) {
    validate_design(design, summaries.size());
    const std::size_t n = summaries.size();
    const std::size_t G = design.pair_count();
    const std::size_t dim = design.features.dimension();
    if (dim == 0) {
        return design;
    }

    std::vector<double> points = feature_matrix(summaries, design.features);
    if (design.method == MatchMethod::greedy_nn) {
        zscore(points, n, dim);
    }

    // Midpoint of each pair and the smaller member id (for ties).
    std::vector<double> mid(G * dim);
    std::vector<const std::string*> min_id(G);
    for (std::size_t j = 0; j < G; ++j) {
        const auto [a, b] = design.pair(j);
        for (std::size_t c = 0; c < dim; ++c) {
            mid[j * dim + c] = 0.5 * (points[a * dim + c] + points[b * dim + c]);
        }
        min_id[j] = &std::min(summaries[a].cluster_id, summaries[b].cluster_id);
    }
    const auto less_id = [&](std::size_t p, std::size_t q) { return *min_id[p] < *min_id[q]; };

    std::vector<std::size_t> pair_order;
    if (dim == 1) {
        pair_order.resize(G);
        std::iota(pair_order.begin(), pair_order.end(), std::size_t{0});
        std::sort(pair_order.begin(), pair_order.end(), [&](std::size_t p, std::size_t q) {
            if (mid[p] != mid[q]) {
                return mid[p] < mid[q];
            }
            return less_id(p, q);
        });
    } else {
        pair_order = greedy_pairs(mid, G, dim, less_id);
    }

    MatchedDesign out = design;
    for (std::size_t j = 0; j < G; ++j) {
        const auto [a, b] = design.pair(pair_order[j]);
        out.permutation[2 * j] = a;
        out.permutation[2 * j + 1] = b;
    }
    return out;
}

ImbalanceReport imbalance_report(const MatchedDesign& design,
                                 std::span<const ClusterSummary> summaries) {
    validate_design(design, summaries.size());
    const std::size_t G = design.pair_count();
    const double inv_g = 1.0 / static_cast<double>(G);

    FeatureSelector family{design.features.covariates, design.matched_on_size};
    const std::size_t dim = family.dimension();
    const std::vector<double> v = dim > 0 ? feature_matrix(summaries, family) : std::vector<double>{};

    auto dist = [&](std::size_t a, std::size_t b) {
        return dim > 0 ? std::sqrt(squared_distance(&v[a * dim], &v[b * dim], dim)) : 0.0;
    };
    auto size = [&](std::size_t g) { return static_cast<double>(summaries[g].n_total); };

    ImbalanceReport report;
    report.matched_on_size = design.matched_on_size;
    const int max_ell = design.matched_on_size ? 2 : 0;
    for (int r = 1; r <= 2; ++r) {
        for (int ell = 0; ell <= max_ell; ++ell) {
            double plain = 0.0;
            double sym = 0.0;
            for (std::size_t j = 0; j < G; ++j) {
                const auto [first, second] = design.pair(j);
                const double d = std::pow(dist(second, first), r);
                plain += std::pow(size(second), ell) * d;
                sym += 0.5 * (std::pow(size(first), ell) + std::pow(size(second), ell)) * d;
            }
            report.pair_discrepancies[{r, ell}] = plain * inv_g;
            report.pair_discrepancies_symmetrized[{r, ell}] = sym * inv_g;
        }
    }
    for (int r = 1; r <= 4; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < G; ++j) {
            const auto [first, second] = design.pair(j);
            s += std::pow(dist(second, first), r);
        }
        report.fourth_moment_sums[r] = s * inv_g;
    }
    for (int k = 2; k <= 3; ++k) {
        for (int l = 0; l <= 1; ++l) {
            double s = 0.0;
            for (std::size_t j = 0; j + 1 < G; j += 2) {
                // 1-based position 4(j/2 + 1) - k is 0-based 2j + 3 - k.
                const std::size_t a = design.permutation[2 * j + 3 - k];
                const std::size_t b = design.permutation[2 * j + 3 - l];
                const double w = design.matched_on_size ? size(a) * size(a) : 1.0;
                const double d = dist(a, b);
                s += w * d * d;
            }
            report.popo_discrepancies[{k, l}] = s * inv_g;
        }
    }
    return report;
}

}  // namespace cmpairs

namespace cmpairs {

void write_design_csv(std::ostream& out, const MatchedDesign& design,
                      std::span<const ClusterSummary> summaries) {
    validate_design(design, summaries.size());
    out << "pair_index,position,cluster_id\n";
    for (std::size_t j = 0; j < design.pair_count(); ++j) {
        const auto [a, b] = design.pair(j);
        out << j << ",0," << csv::escape(summaries[a].cluster_id) << '\n';
        out << j << ",1," << csv::escape(summaries[b].cluster_id) << '\n';
    }
}

MatchedDesign read_design_csv(std::istream& in, std::span<const std::string> cluster_ids,
                              const FeatureSelector& features) {
    const csv::Table table = csv::read(in);
    const auto p_col = table.column("pair_index");
    const auto pos_col = table.column("position");
    const auto id_col = table.column("cluster_id");
    if (p_col == csv::Table::npos || pos_col == csv::Table::npos || id_col == csv::Table::npos) {
        throw Error(Errc::parse_error, "design CSV header must be pair_index,position,cluster_id");
    }
    std::map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < cluster_ids.size(); ++i) {
        index.emplace(cluster_ids[i], i);
    }
    const std::size_t G = table.rows.size() / 2;
    if (table.rows.size() != cluster_ids.size() || table.rows.size() % 2 != 0) {
        throw Error(Errc::invalid_design, "design has " + std::to_string(table.rows.size()) +
                                              " rows but the data has " +
                                              std::to_string(cluster_ids.size()) + " clusters");
    }
    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> perm(table.rows.size(), unset);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& f = table.rows[r];
        const std::size_t line = table.lines[r];
        if (f.size() != table.header.size()) {
            throw Error(Errc::parse_error, "design CSV line " + std::to_string(line) +
                                               " has the wrong field count");
        }
        const long long j = csv::parse_integer(f[p_col], "pair_index", line);
        const long long pos = csv::parse_integer(f[pos_col], "position", line);
        if (j < 0 || static_cast<std::size_t>(j) >= G || (pos != 0 && pos != 1)) {
            throw Error(Errc::invalid_design, "design CSV line " + std::to_string(line) +
                                                  " has pair_index or position out of range");
        }
        const auto it = index.find(f[id_col]);
        if (it == index.end()) {
            throw Error(Errc::unknown_cluster, "design references unknown cluster '" + f[id_col] + "'");
        }
        auto& slot = perm[2 * static_cast<std::size_t>(j) + static_cast<std::size_t>(pos)];
        if (slot != unset) {
            throw Error(Errc::invalid_design, "design slot (" + f[p_col] + ", " + f[pos_col] +
                                                  ") assigned twice");
        }
        slot = it->second;
    }
    MatchedDesign design;
    design.permutation = std::move(perm);
    design.matched_on_size = features.include_size;
    design.method = MatchMethod::sorted_scalar;
    design.features = features;
    validate_design(design, cluster_ids.size());
    return design;
}

}  // namespace cmpairs
