#include "json_io.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cmpairs/error.hpp"

namespace cmpairs::io {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// JSON has no infinities or NaN; they are written as null.
Json number(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

double number_or(const Json& j, const char* key, double fallback) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return fallback;
    }
    return it->get<double>();
}

std::string key_pair(const std::pair<int, int>& k) {
    return "(" + std::to_string(k.first) + "," + std::to_string(k.second) + ")";
}

Json table(const std::map<std::pair<int, int>, double>& m) {
    Json out = Json::object();
    for (const auto& [k, v] : m) {
        out[key_pair(k)] = v;
    }
    return out;
}

[[noreturn]] void bad(const std::string& msg) {
    throw Error(Errc::invalid_argument, msg);
}

void check_schema(const Json& j) {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
        bad("unsupported schema_version " + j.at("schema_version").dump());
    }
}

Json arm_json(const ArmModel& arm) {
    return Json{{"intercept", arm.intercept}, {"x_slope", arm.x_slope}, {"n_slope", arm.n_slope}};
}

void read_arm(const Json& j, ArmModel& arm) {
    arm.intercept = j.value("intercept", arm.intercept);
    if (j.contains("x_slope")) {
        const auto& xs = j.at("x_slope");
        arm.x_slope = xs.is_array() ? xs.get<std::vector<double>>() : std::vector<double>{xs.get<double>()};
    }
    arm.n_slope = j.value("n_slope", arm.n_slope);
}

}  // namespace

Json to_json(const PointEstimate& e) {
    return Json{{"estimand", std::string(estimand_name(e.estimand))},
                {"delta_hat", e.delta_hat},
                {"mu1", e.mu1},
                {"mu0", e.mu0},
                {"n1", e.n1},
                {"n0", e.n0}};
}

Json to_json(const ImbalanceReport& report) {
    Json moments = Json::object();
    for (const auto& [r, v] : report.fourth_moment_sums) {
        moments[std::to_string(r)] = v;
    }
    return Json{{"matched_on_size", report.matched_on_size},
                {"pair_discrepancies", table(report.pair_discrepancies)},
                {"pair_discrepancies_symmetrized", table(report.pair_discrepancies_symmetrized)},
                {"popo_discrepancies", table(report.popo_discrepancies)},
                {"fourth_moment_sums", moments}};
}

Json to_json(const InferenceResult& r) {
    return Json{{"schema_version", kSchemaVersion},
                {"estimand", std::string(estimand_name(r.estimate.estimand))},
                {"delta_hat", r.estimate.delta_hat},
                {"mu1", r.estimate.mu1},
                {"mu0", r.estimate.mu0},
                {"n1", r.estimate.n1},
                {"n0", r.estimate.n0},
                {"tau2", r.variance.tau2},
                {"lambda2", r.variance.lambda2},
                {"v2", r.variance.v2},
                {"clamped", r.variance.clamped},
                {"pair_count", r.pair_count},
                {"se", number(r.se)},
                {"z", number(r.z)},
                {"p_value", r.p_value},
                {"ci_low", number(r.ci_low)},
                {"ci_high", number(r.ci_high)},
                {"alpha", r.alpha},
                {"delta0", r.delta0},
                {"degenerate", r.degenerate}};
}

InferenceResult inference_from_json(const Json& j) {
    check_schema(j);
    InferenceResult r;
    r.estimate.estimand = j.at("estimand").get<std::string>() == "equal_weighted"
                              ? Estimand::equal_weighted
                              : Estimand::size_weighted;
    r.estimate.delta_hat = j.at("delta_hat").get<double>();
    r.estimate.mu1 = j.at("mu1").get<double>();
    r.estimate.mu0 = j.at("mu0").get<double>();
    r.estimate.n1 = j.at("n1").get<double>();
    r.estimate.n0 = j.at("n0").get<double>();
    r.variance.tau2 = j.at("tau2").get<double>();
    r.variance.lambda2 = j.at("lambda2").get<double>();
    r.variance.v2 = j.at("v2").get<double>();
    r.variance.clamped = j.at("clamped").get<bool>();
    r.pair_count = j.at("pair_count").get<std::size_t>();
    r.se = number_or(j, "se", kNaN);
    r.z = number_or(j, "z", kNaN);
    r.p_value = j.at("p_value").get<double>();
    r.ci_low = number_or(j, "ci_low", -kInf);
    r.ci_high = number_or(j, "ci_high", kInf);
    r.alpha = j.at("alpha").get<double>();
    r.delta0 = j.at("delta0").get<double>();
    r.degenerate = j.at("degenerate").get<bool>();
    return r;
}

Json to_json(const RandTestResult& r) {
    return Json{{"schema_version", kSchemaVersion},
                {"t_obs", number(r.t_obs)},
                {"t_obs_infinite", std::isinf(r.t_obs)},
                {"p_value", r.p_value},
                {"mode", std::string(rand_mode_name(r.mode))},
                {"draws", r.draws},
                {"reject", r.reject},
                {"alpha", r.alpha},
                {"delta0", r.delta0}};
}

RandTestResult randtest_from_json(const Json& j) {
    check_schema(j);
    RandTestResult r;
    r.t_obs = j.value("t_obs_infinite", false) ? kInf : number_or(j, "t_obs", kNaN);
    r.p_value = j.at("p_value").get<double>();
    r.mode = j.at("mode").get<std::string>() == "exact" ? RandMode::exact : RandMode::stochastic;
    r.draws = j.at("draws").get<std::size_t>();
    r.reject = j.at("reject").get<bool>();
    r.alpha = j.at("alpha").get<double>();
    r.delta0 = j.at("delta0").get<double>();
    return r;
}

Json to_json(const DgpSpec& d) {
    Json cov{{"family", d.covariate_law.family == CovariateFamily::uniform ? "uniform" : "normal"},
             {"a", d.covariate_law.a},
             {"b", d.covariate_law.b}};
    Json size{{"family", d.size_law.family == SizeFamily::uniform_int ? "uniform_int" : "constant"},
              {"min", d.size_law.min},
              {"max", d.size_law.max}};
    Json sampling{{"rule", d.sampling.rule == SamplingRule::full ? "full" : "fraction"},
                  {"fraction", d.sampling.fraction}};
    Json outcome{{"control", arm_json(d.outcome.control)},
                 {"treated", arm_json(d.outcome.treated)},
                 {"cluster_sd", d.outcome.cluster_sd},
                 {"unit_sd", d.outcome.unit_sd}};
    return Json{{"covariate_dim", d.covariate_dim},
                {"covariate_law", cov},
                {"size_law", size},
                {"sampling", sampling},
                {"outcome", outcome}};
}

DgpSpec dgp_from_json(const Json& j) {
    DgpSpec d = j.contains("preset") ? dgp_preset(j.at("preset").get<std::string>()) : default_dgp();
    if (j.contains("covariate_dim")) {
        d.covariate_dim = j.at("covariate_dim").get<std::size_t>();
    }
    if (j.contains("covariate_law")) {
        const auto& c = j.at("covariate_law");
        const std::string fam = c.value("family", std::string("uniform"));
        if (fam != "uniform" && fam != "normal") {
            bad("unknown covariate_law family '" + fam + "'");
        }
        d.covariate_law.family = fam == "uniform" ? CovariateFamily::uniform : CovariateFamily::normal;
        d.covariate_law.a = c.value("a", d.covariate_law.a);
        d.covariate_law.b = c.value("b", d.covariate_law.b);
    }
    if (j.contains("size_law")) {
        const auto& s = j.at("size_law");
        const std::string fam = s.value("family", std::string("uniform_int"));
        if (fam != "uniform_int" && fam != "constant") {
            bad("unknown size_law family '" + fam + "'");
        }
        d.size_law.family = fam == "uniform_int" ? SizeFamily::uniform_int : SizeFamily::constant;
        d.size_law.min = s.value("min", d.size_law.min);
        d.size_law.max = s.value("max", d.size_law.family == SizeFamily::constant ? d.size_law.min
                                                                                  : d.size_law.max);
    }
    if (j.contains("sampling")) {
        const auto& s = j.at("sampling");
        const std::string rule = s.value("rule", std::string("full"));
        if (rule != "full" && rule != "fraction") {
            bad("unknown sampling rule '" + rule + "'");
        }
        d.sampling.rule = rule == "full" ? SamplingRule::full : SamplingRule::fraction;
        d.sampling.fraction = s.value("fraction", rule == "full" ? 1.0 : d.sampling.fraction);
    }
    if (j.contains("outcome")) {
        const auto& o = j.at("outcome");
        if (o.contains("control")) read_arm(o.at("control"), d.outcome.control);
        if (o.contains("treated")) read_arm(o.at("treated"), d.outcome.treated);
        d.outcome.cluster_sd = o.value("cluster_sd", d.outcome.cluster_sd);
        d.outcome.unit_sd = o.value("unit_sd", d.outcome.unit_sd);
    }
    validate_dgp(d);
    if (j.contains("true_delta")) {
        d = with_true_delta(std::move(d), j.at("true_delta").get<double>());
    }
    return d;
}

Json to_json(const MonteCarloConfig& c) {
    Json test{{"kind", c.test == TestKind::z ? "z" : "rand"}};
    if (c.test == TestKind::rand) {
        test["mode"] = std::string(rand_mode_name(c.rand_mode));
        test["B"] = c.rand_draws;
    }
    return Json{{"dgp", to_json(c.dgp)},
                {"G", c.pair_count},
                {"match_mode", std::string(match_mode_name(c.match_mode))},
                {"replications", c.replications},
                {"alpha", c.alpha},
                {"delta0", c.delta0},
                {"test", test},
                {"seed", c.seed},
                {"threads", c.threads},
                {"oracle_draws", c.oracle_draws}};
}

MonteCarloConfig config_from_json(const Json& j) {
    MonteCarloConfig c;
    if (j.contains("dgp")) {
        c.dgp = dgp_from_json(j.at("dgp"));
    }
    c.pair_count = j.value("G", c.pair_count);
    if (j.contains("match_mode")) {
        c.match_mode = parse_match_mode(j.at("match_mode").get<std::string>());
    }
    c.replications = j.value("replications", c.replications);
    c.alpha = j.value("alpha", c.alpha);
    c.delta0 = j.value("delta0", c.delta0);
    if (j.contains("test")) {
        const auto& t = j.at("test");
        const std::string kind = t.value("kind", std::string("z"));
        if (kind == "z") {
            c.test = TestKind::z;
        } else if (kind == "rand") {
            c.test = TestKind::rand;
            const std::string mode = t.value("mode", std::string("stochastic"));
            if (mode != "exact" && mode != "stochastic") {
                bad("unknown randomization mode '" + mode + "'");
            }
            c.rand_mode = mode == "exact" ? RandMode::exact : RandMode::stochastic;
            c.rand_draws = t.value("B", c.rand_draws);
        } else {
            bad("unknown test kind '" + kind + "'");
        }
    }
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.oracle_draws = j.value("oracle_draws", c.oracle_draws);
    if (c.replications < 100) {
        bad("simulate needs at least 100 replications");
    }
    return c;
}

Json to_json(const SimReport& r) {
    return Json{{"schema_version", kSchemaVersion},
                {"replications", r.replications},
                {"true_delta", r.true_delta},
                {"bias", r.bias},
                {"empirical_sd", r.empirical_sd},
                {"mean_v2", r.mean_v2},
                {"median_v2", r.median_v2},
                {"coverage", r.coverage},
                {"rejection_rate_z", r.rejection_rate_z},
                {"rejection_rate_rand", number(r.rejection_rate_rand)},
                {"oracle_variance", number(r.oracle_variance)},
                {"seed", r.config.seed},
                {"config", to_json(r.config)}};
}

SimReport report_from_json(const Json& j) {
    check_schema(j);
    SimReport r;
    r.config = config_from_json(j.at("config"));
    r.replications = j.at("replications").get<std::size_t>();
    r.true_delta = j.at("true_delta").get<double>();
    r.bias = j.at("bias").get<double>();
    r.empirical_sd = j.at("empirical_sd").get<double>();
    r.mean_v2 = j.at("mean_v2").get<double>();
    r.median_v2 = j.at("median_v2").get<double>();
    r.coverage = j.at("coverage").get<double>();
    r.rejection_rate_z = j.at("rejection_rate_z").get<double>();
    r.rejection_rate_rand = number_or(j, "rejection_rate_rand", kNaN);
    r.oracle_variance = number_or(j, "oracle_variance", kNaN);
    return r;
}

}  // namespace cmpairs::io
