#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cmpairs/dataset.hpp"
#include "cmpairs/matching.hpp"
#include "cmpairs/randtest.hpp"

namespace cmpairs {

// ---------------------------------------------------------------------------
// Data-generating process.
//
// Clusters are i.i.d.: X_g has independent coordinates from `covariate_law`,
// N_g ~ `size_law` independently of X_g, |S_g| follows `sampling`, and unit
// potential outcomes are
//
//     Y_{i,g}(d) = mu_d(X_g, N_g) + gamma_g + eps_{i,g},
//     mu_d(x, n) = intercept_d + x_slope_d . x + n_slope_d * n,
//
// with gamma_g ~ N(0, cluster_sd^2) and eps_{i,g} ~ N(0, unit_sd^2) shared by
// both arms. Treatment therefore shifts every unit by mu_1 - mu_0, and
// mu_1 == mu_0 is the sharp null.
// ---------------------------------------------------------------------------

enum class CovariateFamily { uniform, normal };

struct CovariateLaw {
    CovariateFamily family = CovariateFamily::uniform;
    /// uniform: [a, b]; normal: mean a, sd b.
    double a = 0.0;
    double b = 1.0;

    double mean() const noexcept;
};

enum class SizeFamily { uniform_int, constant };

struct SizeLaw {
    SizeFamily family = SizeFamily::uniform_int;
    /// uniform_int: {min, ..., max}; constant: min.
    std::int64_t min = 10;
    std::int64_t max = 50;

    double mean() const noexcept;
    double second_moment() const noexcept;
};

enum class SamplingRule { full, fraction };

struct Sampling {
    SamplingRule rule = SamplingRule::full;
    double fraction = 1.0;

    /// |S_g| = N_g (full) or max(1, ceil(fraction * N_g)).
    std::int64_t sampled(std::int64_t n_total) const noexcept;
};

struct ArmModel {
    double intercept = 0.0;
    /// Length covariate_dim.
    std::vector<double> x_slope;
    double n_slope = 0.0;

    double mean(std::span<const double> x, double n) const noexcept;
};

struct OutcomeModel {
    ArmModel control;
    ArmModel treated;
    double cluster_sd = 1.0;
    double unit_sd = 1.0;
};

struct DgpSpec {
    std::size_t covariate_dim = 1;
    CovariateLaw covariate_law;
    SizeLaw size_law;
    Sampling sampling;
    OutcomeModel outcome;
};

/// Throws invalid_argument on inconsistent parameters.
void validate_dgp(const DgpSpec& dgp);

/// Size-weighted average treatment effect E[N (mu_1 - mu_0)] / E[N], in
/// closed form for the linear family.
double true_delta(const DgpSpec& dgp);

/// Copy with the treated intercept moved so that true_delta == target.
DgpSpec with_true_delta(DgpSpec dgp, double target);

/// Presets. `default`: one uniform covariate, N uniform on {10..50}, half of
/// each cluster sampled, treatment effect rising with X and N.
/// `sharp_null`: default with mu_1 == mu_0. `size_heterogeneous`: outcome
/// level and effect driven by N, the case where matching on N pays off.
/// `unit_level`: N == 1, full sampling.
DgpSpec default_dgp();
DgpSpec sharp_null_dgp();
DgpSpec size_heterogeneous_dgp();
DgpSpec unit_level_dgp();
/// Looks a preset up by name; throws invalid_argument for unknown names.
DgpSpec dgp_preset(std::string_view name);

// ---------------------------------------------------------------------------
// Trials.
// ---------------------------------------------------------------------------

enum class MatchMode { sorted_x, nn_x, nn_xn };

std::string_view match_mode_name(MatchMode mode) noexcept;
MatchMode parse_match_mode(std::string_view name);

struct Trial {
    Dataset dataset;
    MatchedDesign design;
    double true_delta = 0.0;
};

/// Draws 2G clusters, matches them per `mode` (sorted_x uses covariate 0),
/// orders pairs for variance estimation, assigns treatment within pairs and
/// reveals the observed outcomes. Cluster g draws from its own substreams,
/// so the sample does not depend on the matching mode.
Trial generate_trial(const DgpSpec& dgp, std::size_t pair_count, MatchMode mode, std::uint64_t seed);

/// Runs the matching step of generate_trial on existing summaries.
MatchedDesign match_clusters(std::span<const ClusterSummary> summaries, MatchMode mode);

// ---------------------------------------------------------------------------
// Oracle variance.
// ---------------------------------------------------------------------------

enum class OracleTarget { x_only, x_and_n };

/// Asymptotic variance of sqrt(G)(delta_hat - Delta):
///     E[Yt(1)^2] + E[Yt(0)^2] - E[(E[Yt(1) + Yt(0) | C])^2] / 2,
///     Yt(d) = (N / E[N]) (Ybar(d) - E[Ybar(d) N] / E[N]),
/// with C = X (x_only, omega^2) or C = (X, N) (x_and_n, nu^2). Outer Monte
/// Carlo over (X, N, |S|); the conditional moments given (X, N, |S|) and the
/// population moments of N are closed form for the linear family.
double oracle_variance(const DgpSpec& dgp, OracleTarget target, std::size_t draws,
                       std::uint64_t seed);

OracleTarget oracle_target_for(MatchMode mode) noexcept;

// ---------------------------------------------------------------------------
// Monte Carlo harness.
// ---------------------------------------------------------------------------

enum class TestKind { z, rand };

struct MonteCarloConfig {
    DgpSpec dgp;
    std::size_t pair_count = 100;
    MatchMode match_mode = MatchMode::sorted_x;
    std::size_t replications = 1000;
    double alpha = 0.05;
    double delta0 = 0.0;
    TestKind test = TestKind::z;
    RandMode rand_mode = RandMode::stochastic;
    std::size_t rand_draws = 999;
    std::uint64_t seed = 0;
    /// 0 selects std::thread::hardware_concurrency().
    unsigned threads = 0;
    /// Outer draws for the reported oracle variance; 0 skips it.
    std::size_t oracle_draws = 1'000'000;
    /// Keep per-replication delta_hat and v2.
    bool keep_replicates = false;
};

struct SimReport {
    MonteCarloConfig config;
    std::size_t replications = 0;
    double true_delta = 0.0;
    double bias = 0.0;
    /// Sample sd of sqrt(G) * delta_hat over replications.
    double empirical_sd = 0.0;
    double mean_v2 = 0.0;
    double median_v2 = 0.0;
    /// Fraction of z-based 1 - alpha intervals containing the true Delta.
    double coverage = 0.0;
    double rejection_rate_z = 0.0;
    /// NaN unless config.test == rand.
    double rejection_rate_rand = 0.0;
    /// NaN when config.oracle_draws == 0.
    double oracle_variance = 0.0;
    std::vector<double> delta_hat;
    std::vector<double> v2;
};

/// Per-replication seed: derive_seed(config.seed, replication).
SimReport monte_carlo(const MonteCarloConfig& config);

}  // namespace cmpairs
