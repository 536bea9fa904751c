#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "cmpairs/assignment.hpp"
#include "cmpairs/dataset.hpp"
#include "cmpairs/error.hpp"
#include "cmpairs/estimation.hpp"
#include "cmpairs/inference.hpp"
#include "cmpairs/matching.hpp"
#include "cmpairs/randtest.hpp"
#include "cmpairs/simulation.hpp"
#include "json_io.hpp"

namespace cmpairs::cli {

namespace {

/// Raised for flag combinations CLI11 cannot express (exit 64).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::parse_error, "cannot open '" + path + "'");
    }
    return in;
}

/// Writes to `path`, or to `fallback` when path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::string& text) {
    if (path.empty()) {
        fallback << text;
        return;
    }
    std::ofstream file(path);
    if (!file) {
        throw Error(Errc::parse_error, "cannot write '" + path + "'");
    }
    file << text;
}

Dataset read_dataset(const std::string& units, const std::string& clusters) {
    auto u = open_input(units);
    auto c = open_input(clusters);
    return load_dataset(u, c);
}

std::vector<std::string> ids_of(std::span<const ClusterSummary> summaries) {
    std::vector<std::string> ids;
    ids.reserve(summaries.size());
    for (const auto& s : summaries) {
        ids.push_back(s.cluster_id);
    }
    return ids;
}

/// Maps covariate names (x1, x2, ...) to indices.
std::vector<std::size_t> parse_features(const std::vector<std::string>& names, std::size_t k) {
    std::vector<std::size_t> out;
    for (const auto& name : names) {
        std::size_t idx = 0;
        if (name.size() < 2 || name[0] != 'x' ||
            std::from_chars(name.data() + 1, name.data() + name.size(), idx).ec != std::errc{} ||
            idx < 1 || idx > k) {
            throw UsageError("unknown covariate '" + name + "' (expected x1..x" + std::to_string(k) + ")");
        }
        out.push_back(idx - 1);
    }
    return out;
}

struct Options {
    std::string units;
    std::string clusters;
    std::string design;
    std::string out;
    std::optional<std::uint64_t> seed;
    // match
    std::string method = "nn";
    std::string key = "x1";
    std::vector<std::string> features;
    bool include_size = false;
    std::string imbalance_out;
    // analyze / randtest
    double alpha = 0.05;
    double delta0 = 0.0;
    bool unshifted_variance = false;
    bool matched_on_size = false;
    std::string mode = "exact";
    std::size_t draws = 999;
    std::size_t max_exact_pairs = 20;
    // simulate
    std::string config;
    std::optional<unsigned> threads;
};

int cmd_match(const Options& o, std::ostream& out) {
    std::vector<ClusterSummary> summaries;
    if (o.units.empty()) {
        auto c = open_input(o.clusters);
        summaries = read_cluster_table(c);
    } else {
        summaries = summarize(read_dataset(o.units, o.clusters));
    }
    const std::size_t k = summaries.empty() ? 0 : summaries.front().covariates.size();

    MatchedDesign design;
    if (o.method == "sorted") {
        FeatureSelector key = o.key == "n_total" ? FeatureSelector::size_only()
                                                 : FeatureSelector{parse_features({o.key}, k), false};
        design = pair_sorted_scalar(summaries, key);
    } else {
        FeatureSelector f{o.features.empty() ? FeatureSelector::all_covariates(k, false).covariates
                                             : parse_features(o.features, k),
                          o.include_size};
        design = pair_greedy_nn(summaries, f);
    }
    design = order_pairs_for_variance(design, summaries);

    std::ostringstream csv;
    write_design_csv(csv, design, summaries);
    emit(o.out, out, csv.str());
    if (!o.imbalance_out.empty()) {
        io::Json j = io::to_json(imbalance_report(design, summaries));
        j["schema_version"] = io::kSchemaVersion;
        emit(o.imbalance_out, out, j.dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_assign(const Options& o, std::ostream& out) {
    auto c = open_input(o.clusters);
    std::vector<ClusterSummary> summaries = read_cluster_table(c);
    auto d = open_input(o.design);
    const MatchedDesign design = read_design_csv(d, ids_of(summaries));
    const std::vector<int> treatment = assign_within_pairs(design, {*o.seed});
    for (std::size_t g = 0; g < summaries.size(); ++g) {
        summaries[g].treatment = treatment[g];
    }
    std::ostringstream csv;
    write_cluster_table(csv, summaries);
    emit(o.out, out, csv.str());
    return kExitOk;
}

MatchedDesign read_analysis_design(const Options& o, const Dataset& data,
                                   std::span<const ClusterSummary> summaries) {
    auto d = open_input(o.design);
    return read_design_csv(d, ids_of(summaries),
                           FeatureSelector::all_covariates(data.covariate_dim, o.matched_on_size));
}

int cmd_analyze(const Options& o, std::ostream& out) {
    const Dataset data = read_dataset(o.units, o.clusters);
    const auto summaries = summarize(data);
    const MatchedDesign design = read_analysis_design(o, data, summaries);

    InferenceOptions opts;
    opts.alpha = o.alpha;
    opts.delta0 = o.delta0;
    opts.shift_variance = !o.unshifted_variance;
    const InferenceResult result = infer(data, design, opts);

    io::Json j = io::to_json(result);
    j["equal_weighted"] = io::to_json(estimate_equal_weighted(summaries));
    j["imbalance"] = io::to_json(imbalance_report(design, summaries));
    emit(o.out, out, j.dump(2) + "\n");
    return kExitOk;
}

int cmd_randtest(const Options& o, std::ostream& out) {
    const Dataset data = read_dataset(o.units, o.clusters);
    const auto summaries = summarize(data);
    const MatchedDesign design = read_analysis_design(o, data, summaries);

    RandTestOptions opts;
    opts.alpha = o.alpha;
    opts.delta0 = o.delta0;
    opts.mode = o.mode == "exact" ? RandMode::exact : RandMode::stochastic;
    opts.draws = o.draws;
    opts.seed = o.seed.value_or(0);
    opts.max_exact_pairs = o.max_exact_pairs;
    const RandTestResult result = randomization_test(data, design, opts);

    io::Json j = io::to_json(result);
    if (o.seed) {
        j["seed"] = *o.seed;
    }
    emit(o.out, out, j.dump(2) + "\n");
    return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    auto in = open_input(o.config);
    io::Json cfg_json;
    try {
        cfg_json = io::Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, std::string("config JSON: ") + e.what());
    }
    if (!o.seed && !cfg_json.contains("seed")) {
        throw UsageError("simulate needs --seed or a \"seed\" field in the config");
    }
    MonteCarloConfig config = io::config_from_json(cfg_json);
    if (o.seed) {
        config.seed = *o.seed;
    }
    if (o.threads) {
        config.threads = *o.threads;
    }
    const SimReport report = monte_carlo(config);
    emit(o.out, out, io::to_json(report).dump(2) + "\n");
    return kExitOk;
}

void write_error(std::ostream& err, std::string_view code, const std::string& message) {
    err << io::Json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Matched-pairs cluster randomized trials: design, estimation and inference"};
    app.name("cmpairs");
    app.require_subcommand(1);

    auto add_data = [&](CLI::App* sub, bool units_required) {
        auto* u = sub->add_option("--units", o.units, "Units CSV (cluster_id,unit_id,outcome)")
                      ->check(CLI::ExistingFile);
        if (units_required) {
            u->required();
        }
        sub->add_option("--clusters", o.clusters, "Clusters CSV (cluster_id,n_total,x1..xk[,treatment])")
            ->required()
            ->check(CLI::ExistingFile);
    };
    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output path (default: standard output)");
    };
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Master seed (unsigned 64-bit)");
    };

    auto* match = app.add_subcommand("match", "Pair clusters and write a design CSV");
    add_data(match, false);
    add_out(match);
    match->add_option("--method", o.method, "sorted | nn")->check(CLI::IsMember({"sorted", "nn"}));
    match->add_option("--key", o.key, "Sort key for --method sorted: x<j> or n_total");
    match->add_option("--features", o.features, "Covariates for --method nn (default: all)")->delimiter(',');
    match->add_flag("--include-size", o.include_size, "Append cluster size to the nn features");
    match->add_option("--imbalance", o.imbalance_out, "Write the imbalance report JSON here");

    auto* assign = app.add_subcommand("assign", "Randomize treatment within pairs");
    assign->add_option("--clusters", o.clusters, "Clusters CSV")->required()->check(CLI::ExistingFile);
    assign->add_option("--design", o.design, "Design CSV")->required()->check(CLI::ExistingFile);
    add_out(assign);
    add_seed(assign);

    auto* analyze = app.add_subcommand("analyze", "Estimate the size-weighted effect with a z-test");
    add_data(analyze, true);
    analyze->add_option("--design", o.design, "Design CSV")->required()->check(CLI::ExistingFile);
    add_out(analyze);
    analyze->add_option("--alpha", o.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
    analyze->add_option("--delta0", o.delta0, "Hypothesized effect");
    analyze->add_flag("--unshifted-variance", o.unshifted_variance,
                      "Evaluate the variance on unshifted outcomes");
    analyze->add_flag("--matched-on-size", o.matched_on_size,
                      "Report size-based (W) imbalance diagnostics");

    auto* randtest = app.add_subcommand("randtest", "Within-pair randomization test");
    add_data(randtest, true);
    randtest->add_option("--design", o.design, "Design CSV")->required()->check(CLI::ExistingFile);
    add_out(randtest);
    add_seed(randtest);
    randtest->add_option("--mode", o.mode, "exact | stochastic")
        ->check(CLI::IsMember({"exact", "stochastic"}));
    randtest->add_option("--B", o.draws, "Stochastic draws, identity included");
    randtest->add_option("--alpha", o.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
    randtest->add_option("--delta0", o.delta0, "Hypothesized effect");
    randtest->add_option("--max-exact-pairs", o.max_exact_pairs, "Largest G enumerated exactly");
    randtest->add_flag("--matched-on-size", o.matched_on_size, "Design was matched on size");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study from a JSON config");
    simulate->add_option("--config", o.config, "Simulation config JSON")->required()->check(CLI::ExistingFile);
    add_out(simulate);
    add_seed(simulate);
    simulate->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

    std::vector<std::string> argv_tail(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(argv_tail.begin(), argv_tail.end());
    try {
        app.parse(argv_tail);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (!(o.alpha > 0.0 && o.alpha < 1.0)) {
            throw UsageError("--alpha must lie in (0, 1)");
        }
        if (*assign && !o.seed) {
            throw UsageError("assign requires --seed");
        }
        if (*randtest && o.mode == "stochastic" && !o.seed) {
            throw UsageError("randtest --mode stochastic requires --seed");
        }
        if (*match) return cmd_match(o, out);
        if (*assign) return cmd_assign(o, out);
        if (*analyze) return cmd_analyze(o, out);
        if (*randtest) return cmd_randtest(o, out);
        if (*simulate) return cmd_simulate(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        write_error(err, errc_name(e.code()), e.what());
        return kExitDataError;
    } catch (const nlohmann::json::exception& e) {
        write_error(err, "InvalidConfig", e.what());
        return kExitDataError;
    }
    return kExitUsage;
}

}  // namespace cmpairs::cli
