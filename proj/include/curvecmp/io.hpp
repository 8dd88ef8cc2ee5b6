#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "curvecmp/closed_form.hpp"
#include "curvecmp/optimizer.hpp"

namespace curvecmp::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kScenarioSchema = "curvecmp.scenario/1";
inline constexpr const char* kResultSchema = "curvecmp.result/1";
inline constexpr const char* kDesignsSchema = "curvecmp.designs/1";
inline constexpr const char* kReportSchema = "curvecmp.report/1";

/// A parsed scenario file: the problem plus the run settings.
struct Scenario {
    Problem problem;
    OptimizeOptions options;
    std::optional<std::string> output;
};

/// Strict parse: unknown keys, wrong types and invalid values raise InvalidInput
/// naming the offending field.
Scenario parse_scenario(const Json& j);

/// Reads and parses a JSON file. Syntax errors are reported with line and column.
Json read_json_file(const std::string& path);
Scenario load_scenario(const std::string& path);

Json to_json(const Design& d);
Design design_from_json(const Json& j, const std::string& where = "design",
                        std::optional<Interval> space = std::nullopt);

Json to_json(const EquivalenceReport& r);
Json to_json(const OptimizeResult& r, const Problem& p);

/// Candidate designs for a check. Accepts result files and design files
/// ({"schema": "curvecmp.designs/1", "xi1": ..., "xi2": ..., "gamma": [g1, g2]}).
struct Candidate {
    Design xi1;
    std::optional<Design> xi2;
    std::optional<std::pair<double, double>> gamma;
};
Candidate candidate_from_json(const Json& j, const Interval& space);

/// Writes JSON to `path`, or to stdout when path is empty or "-".
void write_json(const Json& j, const std::string& path);

}  // namespace curvecmp::io
