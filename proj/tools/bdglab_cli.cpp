#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdglab/experiments.hpp"
#include "bdglab/io.hpp"
#include "bdglab/parallel.hpp"
#include "bdglab/quadvar.hpp"
#include "bdglab/verification.hpp"

using namespace bdglab;

namespace {

// "lp1", "lp2.5", "lpinf" at dimension d.
NormSpec parse_norm_label(const std::string& label, int d) {
  if (label.rfind("lp", 0) != 0) throw std::invalid_argument("unknown norm label: " + label);
  const std::string p = label.substr(2);
  if (p == "inf") return NormSpec::lp(Exponent::infinity(), d);
  return NormSpec::lp(std::stod(p), d);
}

void emit(const ExperimentReport& report, const std::string& output) {
  if (!output.empty()) {
    write_report(report, output);
    std::cerr << "wrote " << output << ".csv and " << output << ".json\n";
  }
  std::cout << report_to_csv(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Martingale inequality laboratory: BDG ratios, Gaussian characteristics, "
               "stochastic integrals"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "Worker threads (default: BDGLAB_WORKERS or 1)");

  // verify
  auto* verify = app.add_subcommand("verify", "Run the full property suite");
  VerifyOptions vopt;
  std::vector<int> only;
  std::string verify_report;
  verify->add_option("--seed", vopt.seed, "Master seed");
  verify->add_option("--alt-workers", vopt.alternate_workers,
                     "Worker count for the determinism rerun");
  verify->add_option("--only", only, "Criteria to run (11 = determinism rerun)")->delimiter(',');
  verify->add_option("--report", verify_report, "Write results as JSON");

  // run
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  std::string config_path;
  std::string output;
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "Output prefix (default: config 'output' field)");

  // probe-umd
  auto* probe = app.add_subcommand("probe-umd", "Lower bounds for UMD constants of lp spaces");
  double probe_p = 2.0;
  std::string probe_norm = "lp1";
  std::vector<int> probe_dims{2, 4, 8};
  std::vector<int> probe_depths{4, 6, 8};
  SearchParams probe_search;
  std::uint64_t probe_seed = 1;
  std::string probe_output;
  probe->add_option("--p", probe_p, "Exponent of the L^p norm");
  probe->add_option("--norm", probe_norm, "Norm label: lp1, lp2, lpinf, lp<q>");
  probe->add_option("--dims", probe_dims, "Dimensions")->delimiter(',');
  probe->add_option("--depths", probe_depths, "Tree depths (<= 14)")->delimiter(',');
  probe->add_option("--restarts", probe_search.restarts, "Restarts per cell");
  probe->add_option("--sweeps", probe_search.sweeps, "Ascent sweeps per restart");
  probe->add_option("--seed", probe_seed, "Master seed");
  probe->add_option("-o,--output", probe_output, "Output prefix");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Cartesian product over d, p and norm");
  std::string sweep_config;
  std::vector<int> sweep_dims{1, 2, 4};
  std::vector<double> sweep_ps{1.0, 2.0};
  std::vector<std::string> sweep_norms{"lp2"};
  std::string sweep_output;
  sweep->add_option("config", sweep_config, "Base experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--d", sweep_dims, "Dimensions")->delimiter(',');
  sweep->add_option("--p", sweep_ps, "Exponents")->delimiter(',');
  sweep->add_option("--norm", sweep_norms, "Norm labels")->delimiter(',');
  sweep->add_option("-o,--output", sweep_output, "Output prefix");

  // dump-paths
  auto* dump = app.add_subcommand("dump-paths", "Write sample paths and covariation processes as CSV");
  std::string dump_config;
  int dump_count = 10;
  std::string dump_output = "paths";
  dump->add_option("config", dump_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  dump->add_option("--count", dump_count, "Number of paths");
  dump->add_option("-o,--output", dump_output, "Output prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (workers > 0) set_worker_count(workers);

    if (*verify) {
      vopt.workers = worker_count();
      vopt.only = std::set<int>(only.begin(), only.end());
      const auto results = run_verification(vopt);
      bool ok = true;
      for (const auto& r : results) {
        std::cout << format_result_line(r) << '\n';
        ok = ok && r.passed;
      }
      if (!verify_report.empty()) {
        std::ofstream(verify_report) << results_to_json(results).dump(2) << '\n';
      }
      return ok ? 0 : 1;
    }

    if (*run) {
      ExperimentConfig c = load_config(config_path);
      const ExperimentReport report = run_experiment(c);
      emit(report, output.empty() ? c.output : output);
      return 0;
    }

    if (*probe) {
      ExperimentConfig c;
      c.experiment = "umd_probe";
      c.norm = parse_norm_label(probe_norm, 1);
      c.p_list = {probe_p};
      c.dims = probe_dims;
      c.search = probe_search;
      c.search.depths = probe_depths;
      c.master_seed = probe_seed;
      emit(run_experiment(c), probe_output);
      return 0;
    }

    if (*sweep) {
      const ExperimentConfig base = load_config(sweep_config);
      ExperimentReport all;
      all.config = base;
      bool first = true;
      for (const auto& label : sweep_norms) {
        for (int d : sweep_dims) {
          for (double p : sweep_ps) {
            ExperimentConfig c = base;
            c.norm = parse_norm_label(label, d);
            c.p_list = {p};
            const ExperimentReport rep = run_experiment(c);
            all.rows.insert(all.rows.end(), rep.rows.begin(), rep.rows.end());
            all.wall_ms += rep.wall_ms;
            if (first) all.run_id = rep.run_id;
            first = false;
          }
        }
      }
      all.run_id = fnv1a_hex(config_to_json(base).dump() + "|sweep");
      emit(all, sweep_output);
      return 0;
    }

    if (*dump) {
      const ExperimentConfig c = load_config(dump_config);
      RandomStream rng(c.master_seed);
      std::vector<MartingalePath> paths;
      std::vector<CovariationProcess> forms;
      const int d = c.norm.dim();
      std::optional<DyadicTree> tree;
      if (c.family.family == Family::paley_walsh) {
        tree.emplace(make_paley_walsh_tree(c.family.depth, d, c.family.increment_scale,
                                           c.family.tree_seed));
      }
      for (int i = 0; i < dump_count; ++i) {
        RandomStream s = rng.substream(static_cast<std::uint64_t>(i));
        MartingalePath m;
        switch (c.family.family) {
          case Family::paley_walsh: m = sample_path(*tree, s); break;
          case Family::brownian_proxy: m = gen_brownian_proxy(c.family.steps, d, c.family.horizon, s); break;
          case Family::compound_poisson:
            m = gen_compound_poisson(
                c.family.rate, c.family.horizon,
                [d, &c](RandomStream& g) { return Eigen::VectorXd(c.family.jump_scale * g.normal_vector(d)); },
                c.family.grid_steps, s);
            break;
          default: {
            const double dt = c.family.horizon / c.family.steps;
            m = gen_gaussian_walk(c.family.steps,
                                  {SymBilinearForm(c.family.increment_scale * c.family.increment_scale * dt *
                                                   Eigen::MatrixXd::Identity(d, d))},
                                  s, dt);
          }
        }
        forms.push_back(covariation_process(m));
        paths.push_back(std::move(m));
      }
      std::ofstream(dump_output + "_paths.csv") << paths_to_csv(paths);
      std::ofstream(dump_output + "_covariation.csv") << covariation_to_csv(forms);
      std::cerr << "wrote " << dump_output << "_paths.csv and " << dump_output
                << "_covariation.csv\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
