#include "cmpairs/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "cmpairs/assignment.hpp"
#include "cmpairs/error.hpp"
#include "cmpairs/inference.hpp"
#include "cmpairs/random.hpp"

namespace cmpairs {

namespace {

// Substream ids under a trial seed.
constexpr std::uint64_t kClusterStream = 1;
constexpr std::uint64_t kAssignStream = 2;
constexpr std::uint64_t kOutcomeStream = 3;
constexpr std::uint64_t kRandTestStream = 4;

double draw_covariate(const CovariateLaw& law, CounterRng& rng) {
    return law.family == CovariateFamily::uniform ? rng.uniform(law.a, law.b) : rng.normal(law.a, law.b);
}

std::int64_t draw_size(const SizeLaw& law, CounterRng& rng) {
    return law.family == SizeFamily::constant ? law.min : rng.uniform_int(law.min, law.max);
}

std::string cluster_name(std::size_t g, std::size_t count) {
    const int width = static_cast<int>(std::to_string(count).size());
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%0*zu", width, g + 1);
    return buf;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

/// E[N mu_d(X, N)] / E[N] with X independent of N.
double size_weighted_mean(const ArmModel& arm, const DgpSpec& dgp) {
    const double ex = dgp.covariate_law.mean();
    double slope_sum = 0.0;
    for (double b : arm.x_slope) {
        slope_sum += b;
    }
    return arm.intercept + slope_sum * ex +
           arm.n_slope * dgp.size_law.second_moment() / dgp.size_law.mean();
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

double CovariateLaw::mean() const noexcept {
    return family == CovariateFamily::uniform ? 0.5 * (a + b) : a;
}

double SizeLaw::mean() const noexcept {
    if (family == SizeFamily::constant) {
        return static_cast<double>(min);
    }
    return 0.5 * static_cast<double>(min + max);
}

double SizeLaw::second_moment() const noexcept {
    if (family == SizeFamily::constant) {
        return static_cast<double>(min) * static_cast<double>(min);
    }
    // Discrete uniform: Var = ((max - min + 1)^2 - 1) / 12.
    const double m = mean();
    const double span = static_cast<double>(max - min + 1);
    return m * m + (span * span - 1.0) / 12.0;
}

std::int64_t Sampling::sampled(std::int64_t n_total) const noexcept {
    if (rule == SamplingRule::full) {
        return n_total;
    }
    const auto m = static_cast<std::int64_t>(std::ceil(fraction * static_cast<double>(n_total) - 1e-12));
    return std::clamp<std::int64_t>(m, 1, n_total);
}

double ArmModel::mean(std::span<const double> x, double n) const noexcept {
    return intercept + dot(x_slope, x) + n_slope * n;
}

void validate_dgp(const DgpSpec& dgp) {
    auto fail = [](const std::string& msg) { throw Error(Errc::invalid_argument, "dgp: " + msg); };
    if (dgp.covariate_dim == 0) {
        fail("covariate_dim must be >= 1");
    }
    if (dgp.covariate_law.family == CovariateFamily::uniform && !(dgp.covariate_law.b > dgp.covariate_law.a)) {
        fail("uniform covariate law needs a < b");
    }
    if (dgp.covariate_law.family == CovariateFamily::normal && !(dgp.covariate_law.b >= 0.0)) {
        fail("normal covariate law needs sd >= 0");
    }
    if (dgp.size_law.min < 1 ||
        (dgp.size_law.family == SizeFamily::uniform_int && dgp.size_law.max < dgp.size_law.min)) {
        fail("size law needs 1 <= min <= max");
    }
    if (dgp.sampling.rule == SamplingRule::fraction &&
        !(dgp.sampling.fraction > 0.0 && dgp.sampling.fraction <= 1.0)) {
        fail("sampling fraction must lie in (0, 1]");
    }
    if (dgp.outcome.control.x_slope.size() != dgp.covariate_dim ||
        dgp.outcome.treated.x_slope.size() != dgp.covariate_dim) {
        fail("x_slope length must equal covariate_dim");
    }
    if (!(dgp.outcome.cluster_sd >= 0.0) || !(dgp.outcome.unit_sd >= 0.0)) {
        fail("noise standard deviations must be >= 0");
    }
}

double true_delta(const DgpSpec& dgp) {
    return size_weighted_mean(dgp.outcome.treated, dgp) - size_weighted_mean(dgp.outcome.control, dgp);
}

DgpSpec with_true_delta(DgpSpec dgp, double target) {
    dgp.outcome.treated.intercept += target - true_delta(dgp);
    return dgp;
}

DgpSpec default_dgp() {
    DgpSpec d;
    d.covariate_dim = 1;
    d.covariate_law = {CovariateFamily::uniform, 0.0, 1.0};
    d.size_law = {SizeFamily::uniform_int, 10, 50};
    d.sampling = {SamplingRule::fraction, 0.5};
    d.outcome.control = {1.0, {1.0}, 0.02};
    d.outcome.treated = {1.5, {2.0}, 0.03};
    d.outcome.cluster_sd = 0.5;
    d.outcome.unit_sd = 1.0;
    return d;
}

DgpSpec sharp_null_dgp() {
    DgpSpec d = default_dgp();
    d.outcome.treated = d.outcome.control;
    return d;
}

DgpSpec size_heterogeneous_dgp() {
    DgpSpec d;
    d.covariate_dim = 1;
    d.covariate_law = {CovariateFamily::uniform, 0.0, 1.0};
    d.size_law = {SizeFamily::uniform_int, 10, 50};
    d.sampling = {SamplingRule::full, 1.0};
    d.outcome.control = {0.0, {0.5}, 0.1};
    d.outcome.treated = {0.0, {0.5}, 0.15};
    d.outcome.cluster_sd = 0.5;
    d.outcome.unit_sd = 1.0;
    return d;
}

DgpSpec unit_level_dgp() {
    DgpSpec d;
    d.covariate_dim = 1;
    d.covariate_law = {CovariateFamily::uniform, 0.0, 1.0};
    d.size_law = {SizeFamily::constant, 1, 1};
    d.sampling = {SamplingRule::full, 1.0};
    d.outcome.control = {0.0, {1.0}, 0.0};
    d.outcome.treated = {0.5, {1.5}, 0.0};
    d.outcome.cluster_sd = 1.0;
    d.outcome.unit_sd = 0.5;
    return d;
}

DgpSpec dgp_preset(std::string_view name) {
    if (name == "default") return default_dgp();
    if (name == "sharp_null") return sharp_null_dgp();
    if (name == "size_heterogeneous") return size_heterogeneous_dgp();
    if (name == "unit_level") return unit_level_dgp();
    throw Error(Errc::invalid_argument, "unknown dgp preset '" + std::string(name) + "'");
}

std::string_view match_mode_name(MatchMode mode) noexcept {
    switch (mode) {
        case MatchMode::sorted_x: return "sorted_x";
        case MatchMode::nn_x: return "nn_x";
        case MatchMode::nn_xn: return "nn_xn";
    }
    return "sorted_x";
}

MatchMode parse_match_mode(std::string_view name) {
    if (name == "sorted_x") return MatchMode::sorted_x;
    if (name == "nn_x") return MatchMode::nn_x;
    if (name == "nn_xn") return MatchMode::nn_xn;
    throw Error(Errc::invalid_argument, "unknown match mode '" + std::string(name) + "'");
}

OracleTarget oracle_target_for(MatchMode mode) noexcept {
    return mode == MatchMode::nn_xn ? OracleTarget::x_and_n : OracleTarget::x_only;
}

MatchedDesign match_clusters(std::span<const ClusterSummary> summaries, MatchMode mode) {
    const std::size_t k = summaries.empty() ? 0 : summaries.front().covariates.size();
    MatchedDesign design;
    switch (mode) {
        case MatchMode::sorted_x:
            design = pair_sorted_scalar(summaries, FeatureSelector::covariate(0));
            break;
        case MatchMode::nn_x:
            design = pair_greedy_nn(summaries, FeatureSelector::all_covariates(k, false));
            break;
        case MatchMode::nn_xn:
            design = pair_greedy_nn(summaries, FeatureSelector::all_covariates(k, true));
            break;
    }
    return order_pairs_for_variance(design, summaries);
}

Trial generate_trial(const DgpSpec& dgp, std::size_t pair_count, MatchMode mode, std::uint64_t seed) {
    validate_dgp(dgp);
    if (pair_count < 2) {
        throw Error(Errc::too_few_pairs, "a simulated trial needs at least 2 pairs");
    }
    const std::size_t n = 2 * pair_count;
    const std::uint64_t cluster_key = derive_seed(seed, kClusterStream);
    const std::uint64_t outcome_key = derive_seed(seed, kOutcomeStream);

    std::vector<ClusterSummary> summaries(n);
    for (std::size_t g = 0; g < n; ++g) {
        CounterRng rng(cluster_key, g);
        auto& s = summaries[g];
        s.cluster_id = cluster_name(g, n);
        s.covariates.resize(dgp.covariate_dim);
        for (auto& x : s.covariates) {
            x = draw_covariate(dgp.covariate_law, rng);
        }
        s.n_total = draw_size(dgp.size_law, rng);
        s.n_sampled = dgp.sampling.sampled(s.n_total);
        s.ybar = std::numeric_limits<double>::quiet_NaN();
    }

    const MatchedDesign design = match_clusters(summaries, mode);
    const std::vector<int> d = assign_within_pairs(design, {derive_seed(seed, kAssignStream)});

    Trial trial;
    trial.design = design;
    trial.true_delta = true_delta(dgp);
    trial.dataset.covariate_dim = dgp.covariate_dim;
    trial.dataset.clusters.reserve(n);
    for (std::size_t g = 0; g < n; ++g) {
        auto& s = summaries[g];
        CounterRng rng(outcome_key, g);
        const ArmModel& arm = d[g] == 1 ? dgp.outcome.treated : dgp.outcome.control;
        const double level = arm.mean(s.covariates, static_cast<double>(s.n_total)) +
                             dgp.outcome.cluster_sd * rng.normal();
        ClusterRecord rec;
        rec.cluster_id = std::move(s.cluster_id);
        rec.n_total = s.n_total;
        rec.covariates = std::move(s.covariates);
        rec.treatment = d[g];
        rec.sampled_outcomes.resize(static_cast<std::size_t>(s.n_sampled));
        for (auto& y : rec.sampled_outcomes) {
            y = level + dgp.outcome.unit_sd * rng.normal();
        }
        trial.dataset.clusters.push_back(std::move(rec));
    }
    return trial;
}

double oracle_variance(const DgpSpec& dgp, OracleTarget target, std::size_t draws, std::uint64_t seed) {
    validate_dgp(dgp);
    if (draws == 0) {
        throw Error(Errc::invalid_argument, "oracle_variance needs at least one draw");
    }
    const double en = dgp.size_law.mean();
    const double en2 = dgp.size_law.second_moment();
    const ArmModel& t = dgp.outcome.treated;
    const ArmModel& c = dgp.outcome.control;
    const double m1 = size_weighted_mean(t, dgp);
    const double m0 = size_weighted_mean(c, dgp);
    const double gamma_var = dgp.outcome.cluster_sd * dgp.outcome.cluster_sd;
    const double eps_var = dgp.outcome.unit_sd * dgp.outcome.unit_sd;

    std::vector<double> x(dgp.covariate_dim);
    double second_moments = 0.0;
    double conditional = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        CounterRng rng(seed, i);
        for (auto& xi : x) {
            xi = draw_covariate(dgp.covariate_law, rng);
        }
        const std::int64_t n_int = draw_size(dgp.size_law, rng);
        const double n = static_cast<double>(n_int);
        const double s = static_cast<double>(dgp.sampling.sampled(n_int));
        const double w = n / en;

        const double r1 = t.mean(x, n) - m1;
        const double r0 = c.mean(x, n) - m0;
        const double within = gamma_var + eps_var / s;
        second_moments += w * w * (r1 * r1 + r0 * r0 + 2.0 * within);

        double m = 0.0;
        if (target == OracleTarget::x_and_n) {
            m = w * (r1 + r0);
        } else {
            // E[N (mu_1 + mu_0)(x, N) | X = x] / E[N] - (M_1 + M_0) E[N | X] / E[N].
            const double level = t.intercept + c.intercept + dot(t.x_slope, x) + dot(c.x_slope, x);
            m = level + (t.n_slope + c.n_slope) * en2 / en - (m1 + m0);
        }
        conditional += m * m;
    }
    const double inv = 1.0 / static_cast<double>(draws);
    return second_moments * inv - 0.5 * conditional * inv;
}

SimReport monte_carlo(const MonteCarloConfig& config) {
    validate_dgp(config.dgp);
    if (config.replications < 1) {
        throw Error(Errc::invalid_argument, "monte_carlo needs at least one replication");
    }
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
    }

    struct Replicate {
        double delta_hat = 0.0;
        double v2 = 0.0;
        bool covered = false;
        bool reject_z = false;
        bool reject_rand = false;
    };
    const std::size_t reps = config.replications;
    std::vector<Replicate> results(reps);
    const double delta = true_delta(config.dgp);

    auto run_one = [&](std::size_t r) {
        const std::uint64_t seed = derive_seed(config.seed, r);
        const Trial trial = generate_trial(config.dgp, config.pair_count, config.match_mode, seed);
        InferenceOptions opts;
        opts.alpha = config.alpha;
        opts.delta0 = config.delta0;
        const InferenceResult inf = infer(trial.dataset, trial.design, opts);
        Replicate& out = results[r];
        out.delta_hat = inf.estimate.delta_hat;
        out.v2 = inf.variance.v2;
        out.covered = inf.ci_low <= delta && delta <= inf.ci_high;
        out.reject_z = !inf.degenerate && inf.p_value <= config.alpha;
        if (config.test == TestKind::rand) {
            RandTestOptions ro;
            ro.alpha = config.alpha;
            ro.delta0 = config.delta0;
            ro.mode = config.rand_mode;
            ro.draws = config.rand_draws;
            ro.seed = derive_seed(seed, kRandTestStream);
            out.reject_rand = randomization_test(trial.dataset, trial.design, ro).reject;
        }
    };

    unsigned threads = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    if (threads == 1) {
        for (std::size_t r = 0; r < reps; ++r) {
            run_one(r);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < reps && !failed; r = next++) {
                    try {
                        run_one(r);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!failed.exchange(true)) {
                            error = std::current_exception();
                        }
                    }
                }
            });
        }
        pool.clear();
        if (error) {
            std::rethrow_exception(error);
        }
    }

    // Reduction in replication order keeps the report independent of threads.
    SimReport report;
    report.config = config;
    report.replications = reps;
    report.true_delta = delta;
    const double root_g = std::sqrt(static_cast<double>(config.pair_count));
    double sum_delta = 0.0;
    double sum_v2 = 0.0;
    std::size_t covered = 0;
    std::size_t reject_z = 0;
    std::size_t reject_rand = 0;
    std::vector<double> v2s;
    v2s.reserve(reps);
    for (const auto& r : results) {
        sum_delta += r.delta_hat;
        sum_v2 += r.v2;
        covered += r.covered ? 1 : 0;
        reject_z += r.reject_z ? 1 : 0;
        reject_rand += r.reject_rand ? 1 : 0;
        v2s.push_back(r.v2);
    }
    const double n = static_cast<double>(reps);
    const double mean_delta = sum_delta / n;
    double ss = 0.0;
    for (const auto& r : results) {
        const double dev = root_g * (r.delta_hat - mean_delta);
        ss += dev * dev;
    }
    report.bias = mean_delta - delta;
    report.empirical_sd = reps > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    report.mean_v2 = sum_v2 / n;
    report.median_v2 = median(v2s);
    report.coverage = static_cast<double>(covered) / n;
    report.rejection_rate_z = static_cast<double>(reject_z) / n;
    report.rejection_rate_rand = config.test == TestKind::rand
                                     ? static_cast<double>(reject_rand) / n
                                     : std::numeric_limits<double>::quiet_NaN();
    report.oracle_variance =
        config.oracle_draws > 0
            ? oracle_variance(config.dgp, oracle_target_for(config.match_mode), config.oracle_draws,
                              derive_seed(config.seed, 0xFFFF'FFFF'FFFF'FFFFULL))
            : std::numeric_limits<double>::quiet_NaN();
    if (config.keep_replicates) {
        report.delta_hat.reserve(reps);
        for (const auto& r : results) {
            report.delta_hat.push_back(r.delta_hat);
        }
        report.v2 = std::move(v2s);
    }
    return report;
}

}  // namespace cmpairs
