#pragma once

#include <cmpairs/dataset.hpp>
#include <cmpairs/random.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cmpairs::testing {

inline ClusterRecord record(std::string id, std::int64_t n_total, std::vector<double> outcomes,
                            std::vector<double> covariates, std::optional<int> treatment) {
    ClusterRecord r;
    r.cluster_id = std::move(id);
    r.n_total = n_total;
    r.sampled_outcomes = std::move(outcomes);
    r.covariates = std::move(covariates);
    r.treatment = treatment;
    return r;
}

/// The four-cluster example: (N=2, Ybar=1, D=1), (N=2, 0, 0), (N=4, 2, 1), (N=4, 1, 0),
/// each cluster fully sampled with constant outcomes.
inline Dataset four_cluster_example() {
    return make_dataset({
        record("a", 2, {1.0, 1.0}, {0.1}, 1),
        record("b", 2, {0.0, 0.0}, {0.2}, 0),
        record("c", 4, {2.0, 2.0, 2.0, 2.0}, {0.8}, 1),
        record("d", 4, {1.0, 1.0, 1.0, 1.0}, {0.9}, 0),
    });
}

inline std::string padded_id(std::size_t i) {
    std::string s = std::to_string(i);
    return "k" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

/// A random dataset with 2G clusters, random sizes in [1, max_size], random
/// subsampling, `dim` uniform covariates and treatments alternating within
/// consecutive id pairs (so the id-order design is balanced).
inline Dataset random_dataset(std::size_t pairs, std::uint64_t seed, std::size_t dim = 1,
                              std::int64_t max_size = 30, bool full_sampling = false,
                              bool unit_sizes = false) {
    CounterRng rng(seed);
    std::vector<ClusterRecord> out;
    bool first_treated = false;
    for (std::size_t g = 0; g < 2 * pairs; ++g) {
        const std::int64_t n = unit_sizes ? 1 : rng.uniform_int(1, max_size);
        const std::int64_t s = full_sampling ? n : rng.uniform_int(1, n);
        std::vector<double> y(static_cast<std::size_t>(s));
        for (double& v : y) v = rng.normal(rng.uniform(-2.0, 2.0), 1.5);
        std::vector<double> x(dim);
        for (double& v : x) v = rng.uniform01();
        if (g % 2 == 0) first_treated = rng.coin();
        const int d = (g % 2 == 0) == first_treated ? 1 : 0;
        out.push_back(record(padded_id(g), n, std::move(y), std::move(x), d));
    }
    return make_dataset(std::move(out));
}

/// Identity-order design pairing clusters (0,1), (2,3), ...
inline std::vector<std::size_t> identity_permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    return p;
}

}  // namespace cmpairs::testing
