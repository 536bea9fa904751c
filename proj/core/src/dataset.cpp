#include "cmpairs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <utility>

#include "cmpairs/csv.hpp"
#include "cmpairs/error.hpp"

namespace cmpairs {

namespace {

struct ClusterRow {
    std::string cluster_id;
    std::int64_t n_total = 0;
    std::vector<double> covariates;
    std::optional<int> treatment;
};

std::vector<ClusterRow> parse_clusters(std::istream& in) {
    const csv::Table table = csv::read(in);
    const auto& header = table.header;
    if (header.size() < 2 || header[0] != "cluster_id" || header[1] != "n_total") {
        throw Error(Errc::parse_error,
                    "clusters CSV header must start with cluster_id,n_total");
    }
    const bool has_treatment = header.back() == "treatment";
    const std::size_t k = header.size() - 2 - (has_treatment ? 1 : 0);

    std::vector<ClusterRow> rows;
    rows.reserve(table.rows.size());
    std::set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& fields = table.rows[r];
        const std::size_t line = table.lines[r];
        if (fields.size() != header.size()) {
            throw Error(Errc::ragged_covariates,
                        "clusters CSV line " + std::to_string(line) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(header.size()));
        }
        ClusterRow row;
        row.cluster_id = fields[0];
        if (row.cluster_id.empty()) {
            throw Error(Errc::parse_error, "empty cluster_id at line " + std::to_string(line));
        }
        if (!seen.insert(row.cluster_id).second) {
            throw Error(Errc::duplicate_cluster, "cluster '" + row.cluster_id + "' listed twice");
        }
        row.n_total = csv::parse_integer(fields[1], "n_total", line);
        row.covariates.reserve(k);
        for (std::size_t j = 0; j < k; ++j) {
            row.covariates.push_back(csv::parse_double(fields[2 + j], header[2 + j], line));
        }
        if (has_treatment) {
            const std::string& t = fields.back();
            if (t == "0") {
                row.treatment = 0;
            } else if (t == "1") {
                row.treatment = 1;
            } else if (!t.empty()) {
                throw Error(Errc::non_binary_treatment,
                            "treatment '" + t + "' for cluster '" + row.cluster_id +
                                "' is not 0 or 1");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void check_finite(double v, const std::string& what, const std::string& cluster_id) {
    if (!std::isfinite(v)) {
        throw Error(Errc::non_finite_value, what + " of cluster '" + cluster_id + "' is not finite");
    }
}

}  // namespace

bool Dataset::has_treatments() const noexcept {
    return !clusters.empty() &&
           std::all_of(clusters.begin(), clusters.end(),
                       [](const ClusterRecord& c) { return c.treatment.has_value(); });
}

Dataset make_dataset(std::vector<ClusterRecord> clusters) {
    if (clusters.empty() || clusters.size() % 2 != 0) {
        throw Error(Errc::odd_cluster_count,
                    "a matched-pairs sample needs a positive even number of clusters, got " +
                        std::to_string(clusters.size()));
    }
    const std::size_t k = clusters.front().covariates.size();
    std::size_t treated_count = 0;
    std::set<std::string_view> ids;
    for (const auto& c : clusters) {
        if (!ids.insert(c.cluster_id).second) {
            throw Error(Errc::duplicate_cluster, "cluster '" + c.cluster_id + "' listed twice");
        }
        if (c.covariates.size() != k) {
            throw Error(Errc::ragged_covariates,
                        "cluster '" + c.cluster_id + "' has " + std::to_string(c.covariates.size()) +
                            " covariates, expected " + std::to_string(k));
        }
        if (c.n_total < 1) {
            throw Error(Errc::parse_error, "n_total of cluster '" + c.cluster_id + "' must be >= 1");
        }
        if (c.sampled_outcomes.empty()) {
            throw Error(Errc::empty_cluster, "cluster '" + c.cluster_id + "' has no sampled units");
        }
        if (static_cast<std::int64_t>(c.sampled_outcomes.size()) > c.n_total) {
            throw Error(Errc::sample_exceeds_size,
                        "cluster '" + c.cluster_id + "' has " +
                            std::to_string(c.sampled_outcomes.size()) + " sampled units but N = " +
                            std::to_string(c.n_total));
        }
        if (c.treatment && *c.treatment != 0 && *c.treatment != 1) {
            throw Error(Errc::non_binary_treatment,
                        "treatment of cluster '" + c.cluster_id + "' is not 0 or 1");
        }
        for (double x : c.covariates) {
            check_finite(x, "covariate", c.cluster_id);
        }
        for (double y : c.sampled_outcomes) {
            check_finite(y, "outcome", c.cluster_id);
        }
        treated_count += c.treatment.has_value() ? 1 : 0;
    }
    if (treated_count != 0 && treated_count != clusters.size()) {
        throw Error(Errc::missing_treatment,
                    "treatment is present for some clusters but not all");
    }

    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const ClusterRecord& a, const ClusterRecord& b) {
                         return a.cluster_id < b.cluster_id;
                     });
    return Dataset{std::move(clusters), k};
}

Dataset load_dataset(std::istream& units, std::istream& clusters) {
    std::vector<ClusterRow> rows = parse_clusters(clusters);

    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        index.emplace(rows[i].cluster_id, i);
    }

    const csv::Table table = csv::read(units);
    const auto c_col = table.column("cluster_id");
    const auto u_col = table.column("unit_id");
    const auto y_col = table.column("outcome");
    if (c_col == csv::Table::npos || u_col == csv::Table::npos || y_col == csv::Table::npos) {
        throw Error(Errc::parse_error, "units CSV header must be cluster_id,unit_id,outcome");
    }

    std::vector<std::vector<double>> outcomes(rows.size());
    std::set<std::pair<std::string, std::string>> seen_units;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& fields = table.rows[r];
        const std::size_t line = table.lines[r];
        if (fields.size() != table.header.size()) {
            throw Error(Errc::parse_error,
                        "units CSV line " + std::to_string(line) + " has the wrong field count");
        }
        const auto it = index.find(fields[c_col]);
        if (it == index.end()) {
            throw Error(Errc::unknown_cluster, "unit at line " + std::to_string(line) +
                                                   " references unknown cluster '" +
                                                   fields[c_col] + "'");
        }
        if (!seen_units.emplace(fields[c_col], fields[u_col]).second) {
            throw Error(Errc::duplicate_unit, "unit ('" + fields[c_col] + "', '" + fields[u_col] +
                                                  "') appears twice");
        }
        const double y = csv::parse_double(fields[y_col], "outcome", line);
        check_finite(y, "outcome", fields[c_col]);
        outcomes[it->second].push_back(y);
    }

    std::vector<ClusterRecord> records;
    records.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        records.push_back(ClusterRecord{std::move(rows[i].cluster_id), rows[i].n_total,
                                        std::move(outcomes[i]), std::move(rows[i].covariates),
                                        rows[i].treatment});
    }
    return make_dataset(std::move(records));
}

std::vector<ClusterSummary> read_cluster_table(std::istream& clusters) {
    std::vector<ClusterRow> rows = parse_clusters(clusters);
    std::vector<ClusterSummary> out;
    out.reserve(rows.size());
    for (auto& row : rows) {
        if (row.n_total < 1) {
            throw Error(Errc::parse_error, "n_total of cluster '" + row.cluster_id + "' must be >= 1");
        }
        for (double x : row.covariates) {
            check_finite(x, "covariate", row.cluster_id);
        }
        out.push_back(ClusterSummary{std::move(row.cluster_id), row.n_total, 0,
                                     std::numeric_limits<double>::quiet_NaN(),
                                     std::move(row.covariates), row.treatment});
    }
    std::stable_sort(out.begin(), out.end(), [](const ClusterSummary& a, const ClusterSummary& b) {
        return a.cluster_id < b.cluster_id;
    });
    return out;
}

std::vector<ClusterSummary> summarize(const Dataset& dataset) {
    std::vector<ClusterSummary> out;
    out.reserve(dataset.clusters.size());
    for (const auto& c : dataset.clusters) {
        const double sum = std::accumulate(c.sampled_outcomes.begin(), c.sampled_outcomes.end(), 0.0);
        const auto m = static_cast<std::int64_t>(c.sampled_outcomes.size());
        out.push_back(ClusterSummary{c.cluster_id, c.n_total, m, sum / static_cast<double>(m),
                                     c.covariates, c.treatment});
    }
    return out;
}

std::vector<int> treatments_of(std::span<const ClusterSummary> summaries) {
    std::vector<int> d;
    d.reserve(summaries.size());
    for (const auto& s : summaries) {
        if (!s.treatment) {
            throw Error(Errc::missing_treatment, "cluster '" + s.cluster_id + "' has no treatment");
        }
        d.push_back(*s.treatment);
    }
    return d;
}

Dataset with_treatments(Dataset dataset, std::span<const int> treatments) {
    if (treatments.size() != dataset.clusters.size()) {
        throw Error(Errc::invalid_argument, "treatment vector length does not match cluster count");
    }
    for (std::size_t g = 0; g < treatments.size(); ++g) {
        if (treatments[g] != 0 && treatments[g] != 1) {
            throw Error(Errc::non_binary_treatment, "treatment must be 0 or 1");
        }
        dataset.clusters[g].treatment = treatments[g];
    }
    return dataset;
}

void write_units_csv(std::ostream& out, const Dataset& dataset) {
    out << "cluster_id,unit_id,outcome\n";
    for (const auto& c : dataset.clusters) {
        const std::string id = csv::escape(c.cluster_id);
        for (std::size_t i = 0; i < c.sampled_outcomes.size(); ++i) {
            out << id << ",u" << (i + 1) << ',' << csv::format_double(c.sampled_outcomes[i]) << '\n';
        }
    }
}

namespace {

void write_cluster_header(std::ostream& out, std::size_t k, bool with_treatment) {
    out << "cluster_id,n_total";
    for (std::size_t j = 0; j < k; ++j) {
        out << ",x" << (j + 1);
    }
    if (with_treatment) {
        out << ",treatment";
    }
    out << '\n';
}

template <class Row>
void write_cluster_row(std::ostream& out, const Row& row, bool with_treatment) {
    out << csv::escape(row.cluster_id) << ',' << row.n_total;
    for (double x : row.covariates) {
        out << ',' << csv::format_double(x);
    }
    if (with_treatment) {
        out << ',' << *row.treatment;
    }
    out << '\n';
}

}  // namespace

void write_clusters_csv(std::ostream& out, const Dataset& dataset) {
    const bool with_treatment = dataset.has_treatments();
    write_cluster_header(out, dataset.covariate_dim, with_treatment);
    for (const auto& c : dataset.clusters) {
        write_cluster_row(out, c, with_treatment);
    }
}

void write_cluster_table(std::ostream& out, std::span<const ClusterSummary> summaries) {
    const bool with_treatment =
        !summaries.empty() && std::all_of(summaries.begin(), summaries.end(),
                                          [](const ClusterSummary& s) { return s.treatment.has_value(); });
    const std::size_t k = summaries.empty() ? 0 : summaries.front().covariates.size();
    write_cluster_header(out, k, with_treatment);
    for (const auto& s : summaries) {
        write_cluster_row(out, s, with_treatment);
    }
}

}  // namespace cmpairs
