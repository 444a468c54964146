#pragma once

#include <string>

#include <json.hpp>

#include "bdglab/bilinear.hpp"
#include "bdglab/experiments.hpp"
#include "bdglab/gaussian.hpp"
#include "bdglab/norms.hpp"

namespace bdglab {

using nlohmann::json;

// {"kind":"lp","p":2,"dim":8}; p may be "inf". Weighted: {"kind":"weighted_lp",
// "p":..,"weights":[..]}. Mixed: {"kind":"mixed","outer":{..},"inner":{..}}.
json norm_to_json(const NormSpec& spec);
NormSpec norm_from_json(const json& j);

json form_to_json(const SymBilinearForm& v);  // row-major nested arrays
SymBilinearForm form_from_json(const json& j);

json gamma_to_json(const GammaEstimate& g);  // {value, stderr, samples, exact}

/// Missing keys take their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

json report_to_json(const ExperimentReport& report);

std::string csv_header();
std::string row_to_csv(const ReportRow& row);
std::string report_to_csv(const ExperimentReport& report, bool header = true);

/// Writes <prefix>.csv and <prefix>.json.
void write_report(const ExperimentReport& report, const std::string& prefix);

}  // namespace bdglab
