#pragma once

#include <json.hpp>

#include "cmpairs/estimation.hpp"
#include "cmpairs/inference.hpp"
#include "cmpairs/matching.hpp"
#include "cmpairs/randtest.hpp"
#include "cmpairs/simulation.hpp"

namespace cmpairs::io {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

Json to_json(const PointEstimate& e);
Json to_json(const ImbalanceReport& report);
Json to_json(const InferenceResult& result);
Json to_json(const RandTestResult& result);
Json to_json(const DgpSpec& dgp);
Json to_json(const MonteCarloConfig& config);
Json to_json(const SimReport& report);

InferenceResult inference_from_json(const Json& j);
RandTestResult randtest_from_json(const Json& j);
/// Accepts either explicit fields or {"preset": name, ...overrides}, plus an
/// optional "true_delta" that moves the treated intercept to hit that value.
DgpSpec dgp_from_json(const Json& j);
MonteCarloConfig config_from_json(const Json& j);
SimReport report_from_json(const Json& j);

}  // namespace cmpairs::io
