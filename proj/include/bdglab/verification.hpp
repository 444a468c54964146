#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace bdglab {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  std::vector<double> fingerprint;  // key estimates, compared across runs
  double wall_ms = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  int workers = 1;            // first run
  int alternate_workers = 3;  // determinism rerun
  std::set<int> only;         // empty means all
};

/// Criteria 1-10 with the current worker setting.
std::vector<CriterionResult> run_criteria(std::uint64_t seed, const std::set<int>& only = {});

/// Compares two runs of run_criteria within 1e-12 relative.
CriterionResult compare_runs(const std::vector<CriterionResult>& a,
                             const std::vector<CriterionResult>& b, int workers_a, int workers_b);

/// Runs criteria 1-10 with options.workers, reruns them with
/// options.alternate_workers and appends the determinism criterion.
std::vector<CriterionResult> run_verification(const VerifyOptions& options);

std::string format_result_line(const CriterionResult& r);
nlohmann::json results_to_json(const std::vector<CriterionResult>& results);

}  // namespace bdglab
