#include "cmpairs/randtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmpairs/error.hpp"
#include "cmpairs/random.hpp"

namespace cmpairs {

namespace {

constexpr double kTieTolerance = 1e-10;

bool at_least(double t, double t_obs) noexcept {
    if (std::isinf(t_obs)) {
        return std::isinf(t);
    }
    return t >= t_obs - kTieTolerance * std::max(1.0, t_obs);
}

/// Data shared by every draw: sizes, shifted cluster means, observed labels.
struct Prepared {
    std::vector<double> size;
    std::vector<double> ybar;
    std::vector<int> treatment;
};

Prepared prepare(const Dataset& dataset, const MatchedDesign& design, double delta0) {
    if (!dataset.has_treatments()) {
        throw Error(Errc::missing_treatment, "the randomization test needs treatments");
    }
    validate_design(design, dataset.cluster_count());
    Prepared p;
    for (const auto& s : summarize(dataset)) {
        const int d = *s.treatment;
        p.size.push_back(static_cast<double>(s.n_total));
        p.ybar.push_back(s.ybar - delta0 * d);
        p.treatment.push_back(d);
    }
    for (std::size_t j = 0; j < design.pair_count(); ++j) {
        const auto [a, b] = design.pair(j);
        if (p.treatment[a] + p.treatment[b] != 1) {
            throw Error(Errc::invalid_design,
                        "pair " + std::to_string(j) + " does not have exactly one treated member");
        }
    }
    return p;
}

void apply_swaps(const MatchedDesign& design, std::span<const int> observed,
                 const SwapPattern& pattern, std::vector<int>& out) {
    std::copy(observed.begin(), observed.end(), out.begin());
    for (std::size_t j = 0; j < pattern.size(); ++j) {
        if (pattern[j]) {
            const auto [a, b] = design.pair(j);
            std::swap(out[a], out[b]);
        }
    }
}

}  // namespace

std::string_view rand_mode_name(RandMode mode) noexcept {
    return mode == RandMode::exact ? "exact" : "stochastic";
}

StudentizedStat studentized_statistic(std::span<const double> size, std::span<const double> ybar,
                                      std::span<const int> treatment,
                                      std::span<const std::size_t> permutation, double floor) {
    const AdjustedOutcomes adjusted = adjusted_outcomes_kernel(size, ybar, treatment);
    StudentizedStat s;
    s.delta_hat = adjusted.treated_mean - adjusted.control_mean;
    s.variance = variance_kernel(adjusted.yhat, permutation, treatment, floor);
    const double G = static_cast<double>(permutation.size() / 2);
    if (s.variance.clamped) {
        double scale = 1.0;
        for (double y : ybar) {
            scale = std::max(scale, std::abs(y));
        }
        s.t = std::abs(s.delta_hat) <= 1e-12 * scale ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
        s.t = std::abs(std::sqrt(G) * s.delta_hat / std::sqrt(s.variance.v2));
    }
    return s;
}

double rand_statistic(const Dataset& dataset, const MatchedDesign& design, double delta0) {
    const Prepared p = prepare(dataset, design, delta0);
    return studentized_statistic(p.size, p.ybar, p.treatment, design.permutation).t;
}

SwapPattern swap_pattern(std::size_t pair_count, std::uint64_t seed, std::size_t index) {
    SwapPattern pattern(pair_count, 0);
    if (index == 0) {
        return pattern;
    }
    CounterRng rng(seed, index);
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < pair_count; ++j) {
        if (j % 64 == 0) {
            bits = rng();
        }
        pattern[j] = static_cast<std::uint8_t>((bits >> (j % 64)) & 1U);
    }
    return pattern;
}

std::vector<SwapPattern> draw_swap_patterns(std::size_t pair_count, std::size_t draws,
                                            std::uint64_t seed) {
    std::vector<SwapPattern> out;
    out.reserve(draws);
    for (std::size_t b = 0; b < draws; ++b) {
        out.push_back(swap_pattern(pair_count, seed, b));
    }
    return out;
}

RandTestResult randomization_test_over(const Dataset& dataset, const MatchedDesign& design,
                                       std::span<const SwapPattern> patterns, double alpha,
                                       double delta0, double floor) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
    }
    if (patterns.empty()) {
        throw Error(Errc::bad_b, "at least one swap pattern is required");
    }
    const Prepared p = prepare(dataset, design, delta0);
    const std::size_t G = design.pair_count();

    RandTestResult r;
    r.mode = RandMode::stochastic;
    r.alpha = alpha;
    r.delta0 = delta0;
    r.draws = patterns.size();
    r.t_obs = studentized_statistic(p.size, p.ybar, p.treatment, design.permutation, floor).t;

    std::vector<int> d(p.treatment.size());
    std::size_t count = 0;
    r.distribution.reserve(patterns.size());
    for (const auto& pattern : patterns) {
        if (pattern.size() != G) {
            throw Error(Errc::invalid_argument, "swap pattern length does not match pair count");
        }
        apply_swaps(design, p.treatment, pattern, d);
        const double t = studentized_statistic(p.size, p.ybar, d, design.permutation, floor).t;
        count += at_least(t, r.t_obs) ? 1 : 0;
        r.distribution.push_back(t);
    }
    r.p_value = static_cast<double>(count) / static_cast<double>(patterns.size());
    r.reject = r.p_value <= alpha;
    return r;
}

RandTestResult randomization_test(const Dataset& dataset, const MatchedDesign& design,
                                  const RandTestOptions& options) {
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
        throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
    }
    const std::size_t G = design.pair_count();
    if (options.mode == RandMode::exact) {
        if (G > options.max_exact_pairs || G >= 63) {
            throw Error(Errc::too_many_pairs_for_exact,
                        "exact enumeration of 2^" + std::to_string(G) + " swaps exceeds the limit of " +
                            std::to_string(options.max_exact_pairs) + " pairs");
        }
    } else if (options.draws < 19) {
        throw Error(Errc::bad_b, "stochastic mode needs B >= 19, got " + std::to_string(options.draws));
    }

    const Prepared p = prepare(dataset, design, options.delta0);
    RandTestResult r;
    r.mode = options.mode;
    r.alpha = options.alpha;
    r.delta0 = options.delta0;
    r.t_obs = studentized_statistic(p.size, p.ybar, p.treatment, design.permutation,
                                    options.variance_floor)
                  .t;

    std::vector<int> d(p.treatment.size());
    SwapPattern pattern(G, 0);
    std::size_t count = 0;
    auto evaluate = [&]() {
        apply_swaps(design, p.treatment, pattern, d);
        const double t =
            studentized_statistic(p.size, p.ybar, d, design.permutation, options.variance_floor).t;
        count += at_least(t, r.t_obs) ? 1 : 0;
        if (options.keep_distribution) {
            r.distribution.push_back(t);
        }
    };

    if (options.mode == RandMode::exact) {
        r.draws = std::size_t{1} << G;
        for (std::size_t mask = 0; mask < r.draws; ++mask) {
            for (std::size_t j = 0; j < G; ++j) {
                pattern[j] = static_cast<std::uint8_t>((mask >> j) & 1U);
            }
            evaluate();
        }
    } else {
        r.draws = options.draws;
        for (std::size_t b = 0; b < r.draws; ++b) {
            pattern = swap_pattern(G, options.seed, b);
            evaluate();
        }
    }
    r.p_value = static_cast<double>(count) / static_cast<double>(r.draws);
    r.reject = r.p_value <= options.alpha;
    return r;
}

}  // namespace cmpairs
