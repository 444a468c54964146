#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bdglab/martingales.hpp"
#include "bdglab/norms.hpp"
#include "bdglab/stats.hpp"
#include "bdglab/stochint.hpp"

namespace bdglab {

struct FamilyParams {
  Family family = Family::paley_walsh;
  int depth = 10;                    // paley_walsh
  bool exhaustive = false;           // paley_walsh: enumerate all leaves
  double increment_scale = 1.0;      // paley_walsh node scale, gaussian_walk step scale
  std::uint64_t tree_seed = 1;
  int steps = 64;                    // gaussian_walk, brownian_proxy
  double horizon = 1.0;
  std::vector<double> vol_schedule;  // gaussian_walk: per-step scale (overrides increment_scale)
  double rate = 5.0;                 // compound_poisson
  double jump_scale = 1.0;
  int grid_steps = 64;
};

struct ItoParams {
  int driver_dim = 1;
  int steps = 256;
  double horizon = 1.0;
  QuadVarMode qv_mode = QuadVarMode::pathwise;
  std::vector<double> breakpoints{0.0, 1.0};
  std::vector<Eigen::MatrixXd> blocks;  // d×k per interval; empty means e_1 ⊗ e_1
  bool predictable_sign = false;        // multiply block i by sign of the driver's first coordinate
};

struct SearchParams {
  long long transforms = 1000;  // minimum number of candidate transforms evaluated
  int restarts = 4;
  int sweeps = 50;
  std::string law = "contractions";  // "signs" ({-1,1}) or "contractions" ({-1,0,1})
  std::vector<int> depths{4, 6, 8};  // umd_probe
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string experiment = "bdg_ratio";
  NormSpec norm = NormSpec::lp(2.0, 1);
  FamilyParams family;
  std::vector<double> p_list{2.0};
  long long replications = 1000;
  long long mc_samples = 10000;  // inner samples for γ when it has no closed form
  std::uint64_t master_seed = 1;
  std::string output;            // path prefix for <output>.csv and <output>.json
  int sub_ensembles = 10;
  ItoParams ito;
  SearchParams search;
  std::vector<int> dims{1, 2, 4, 8};    // independent_increments_ratio, umd_probe
  std::vector<int> steps_list{256, 1024};  // lowp_continuous

  void validate() const;  // throws std::invalid_argument
};

struct ReportRow {
  std::string experiment;
  std::string norm;
  int d = 0;
  double p = 0.0;
  std::string family;
  long long replications = 0;
  MeanEstimate lhs;
  MeanEstimate rhs;
  MeanEstimate ratio;
  double env_min = 0.0;
  double env_max = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  bool exact = false;
  bool degenerate = false;
  MeanEstimate terminal;  // E‖M_T‖^p
  std::map<std::string, double> extras;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string run_id;
  double wall_ms = 0.0;
  std::vector<ReportRow> rows;
  std::map<std::string, double> summary;
  std::vector<std::string> notes;
};

/// Per-path ingredients of both sides of the BDG comparison.
struct PathFunctionals {
  double sup_norm = 0.0;       // max over grid of ‖M_k‖
  double terminal_norm = 0.0;  // ‖M_K‖
  double gamma = 0.0;          // γ([[M]]_T)
  double gamma_std_error = 0.0;
  double trace = 0.0;          // trace [[M]]_T
};

PathFunctionals path_functionals(const MartingalePath& m, const NormSpec& spec,
                                 long long mc_samples, RandomStream& rng);

/// Aggregates (sup^p, γ^p) over paths into one row. `weights` empty means
/// independent replications; otherwise exact weighted expectations.
ReportRow aggregate_row(const std::vector<PathFunctionals>& paths,
                        const std::vector<double>& weights, double p, int sub_ensembles);

ExperimentReport bdg_ratio(const ExperimentConfig& config);
ExperimentReport ito_ratio(const ExperimentConfig& config);
ExperimentReport domination_check(const ExperimentConfig& config);
ExperimentReport umd_probe(const ExperimentConfig& config);
ExperimentReport lowp_continuous(const ExperimentConfig& config);
ExperimentReport independent_increments_ratio(const ExperimentConfig& config);

/// Dispatches on config.experiment.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Worst E sup‖N‖^p / E sup‖M‖^p over predictable factors on a fixed tree,
/// found by coordinate ascent over node factors with restarts.
struct DominationSearch {
  double worst_ratio = 0.0;
  double worst_lhs = 0.0;    // E sup‖N‖^p of the worst transform
  double denominator = 0.0;  // E sup‖M‖^p
  double identity_ratio = 0.0;
  double zero_ratio = 0.0;
  long long transforms_evaluated = 0;
  bool all_finite = true;
};
DominationSearch search_tree_domination(const DyadicTree& tree, const NormSpec& spec, double p,
                                        const SearchParams& params, RandomStream& rng);

/// Lower bound for the UMD constant: max over predictable signs and tree
/// increments of (E‖Σ ε d‖^p / E‖Σ d‖^p)^{1/p}, by alternating ascent.
struct UmdProbeResult {
  double value = 0.0;       // best over restarts
  double std_error = 0.0;   // spread of per-restart bests
  double lhs = 0.0;         // E‖Σ ε d‖^p at the best configuration
  double rhs = 0.0;         // E‖Σ d‖^p at the best configuration
  std::vector<double> restart_values;
  long long evaluations = 0;
  bool budget_exhausted = false;
  std::vector<std::vector<Eigen::VectorXd>> increments;  // best tree, [level][prefix]
  std::vector<std::vector<int>> signs;                    // best signs, [level][prefix]
};
UmdProbeResult probe_umd(const NormSpec& spec, double p, int depth, const SearchParams& params,
                         RandomStream& rng, const UmdProbeResult* warm_start = nullptr);

/// FNV-1a 64-bit hash, hex encoded.
std::string fnv1a_hex(const std::string& text);

}  // namespace bdglab
