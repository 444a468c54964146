#include "bdglab/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bdglab {

namespace {

json exponent_to_json(const Exponent& p) {
  if (p.is_infinite()) return "inf";
  return p.value();
}

Exponent exponent_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return Exponent::infinity();
    throw std::invalid_argument("norm: exponent must be a number or \"inf\"");
  }
  return Exponent::from_double(j.get<double>());
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw std::invalid_argument("matrix: ragged rows");
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return m;
}

json estimate_to_json(const MeanEstimate& e) { return {{"mean", e.mean}, {"stderr", e.std_error}}; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

}  // namespace

json norm_to_json(const NormSpec& spec) {
  switch (spec.kind()) {
    case NormKind::lp:
      return {{"kind", "lp"}, {"p", exponent_to_json(spec.exponent())}, {"dim", spec.dim()}};
    case NormKind::weighted_lp: {
      std::vector<double> w(spec.weights().data(), spec.weights().data() + spec.weights().size());
      return {{"kind", "weighted_lp"}, {"p", exponent_to_json(spec.exponent())}, {"weights", w}};
    }
    case NormKind::mixed:
      return {{"kind", "mixed"}, {"outer", norm_to_json(spec.outer())},
              {"inner", norm_to_json(spec.inner())}};
  }
  return {};
}

NormSpec norm_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "lp") {
    reject_unknown(j, {"kind", "p", "dim"}, "norm");
    return NormSpec::lp(exponent_from_json(j.at("p")), j.at("dim").get<int>());
  }
  if (kind == "weighted_lp") {
    reject_unknown(j, {"kind", "p", "weights", "dim"}, "norm");
    const auto w = j.at("weights").get<std::vector<double>>();
    Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    if (j.contains("dim") && j.at("dim").get<int>() != weights.size()) {
      throw std::invalid_argument("norm: dim disagrees with the weight count");
    }
    return NormSpec::weighted_lp(exponent_from_json(j.at("p")), weights);
  }
  if (kind == "mixed") {
    reject_unknown(j, {"kind", "outer", "inner", "dim"}, "norm");
    return NormSpec::mixed(norm_from_json(j.at("outer")), norm_from_json(j.at("inner")));
  }
  throw std::invalid_argument("norm: unknown kind '" + kind + "'");
}

json form_to_json(const SymBilinearForm& v) { return matrix_to_json(v.matrix()); }

SymBilinearForm form_from_json(const json& j) { return SymBilinearForm(matrix_from_json(j)); }

json gamma_to_json(const GammaEstimate& g) {
  return {{"value", g.value}, {"stderr", g.std_error}, {"samples", g.samples}, {"exact", g.exact}};
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j, {"name", "experiment", "norm", "family", "p_list", "replications",
                     "mc_samples", "master_seed", "output", "sub_ensembles", "ito", "search",
                     "dims", "steps_list"},
                 "config");
  ExperimentConfig c;
  read(j, "name", c.name);
  read(j, "experiment", c.experiment);
  if (j.contains("norm")) c.norm = norm_from_json(j.at("norm"));
  read(j, "p_list", c.p_list);
  read(j, "replications", c.replications);
  read(j, "mc_samples", c.mc_samples);
  read(j, "master_seed", c.master_seed);
  read(j, "output", c.output);
  read(j, "sub_ensembles", c.sub_ensembles);
  read(j, "dims", c.dims);
  read(j, "steps_list", c.steps_list);
  if (j.contains("family")) {
    const json& f = j.at("family");
    reject_unknown(f, {"name", "depth", "exhaustive", "increment_scale", "tree_seed", "steps",
                       "horizon", "vol_schedule", "rate", "jump_scale", "grid_steps"},
                   "family");
    FamilyParams& fp = c.family;
    if (f.contains("name")) fp.family = family_from_string(f.at("name").get<std::string>());
    read(f, "depth", fp.depth);
    read(f, "exhaustive", fp.exhaustive);
    read(f, "increment_scale", fp.increment_scale);
    read(f, "tree_seed", fp.tree_seed);
    read(f, "steps", fp.steps);
    read(f, "horizon", fp.horizon);
    read(f, "vol_schedule", fp.vol_schedule);
    read(f, "rate", fp.rate);
    read(f, "jump_scale", fp.jump_scale);
    read(f, "grid_steps", fp.grid_steps);
    if (!fp.vol_schedule.empty() && static_cast<int>(fp.vol_schedule.size()) != fp.steps) {
      throw std::invalid_argument("family: vol_schedule needs one entry per step");
    }
  }
  if (j.contains("ito")) {
    const json& i = j.at("ito");
    reject_unknown(i, {"driver_dim", "steps", "horizon", "qv_mode", "breakpoints", "blocks",
                       "predictable_sign"},
                   "ito");
    ItoParams& ip = c.ito;
    read(i, "driver_dim", ip.driver_dim);
    read(i, "steps", ip.steps);
    read(i, "horizon", ip.horizon);
    read(i, "breakpoints", ip.breakpoints);
    read(i, "predictable_sign", ip.predictable_sign);
    if (i.contains("qv_mode")) {
      const auto mode = i.at("qv_mode").get<std::string>();
      if (mode == "pathwise") {
        ip.qv_mode = QuadVarMode::pathwise;
      } else if (mode == "ensemble") {
        ip.qv_mode = QuadVarMode::ensemble;
      } else {
        throw std::invalid_argument("ito: qv_mode must be 'pathwise' or 'ensemble'");
      }
    }
    if (i.contains("blocks")) {
      ip.blocks.clear();
      for (const auto& b : i.at("blocks")) ip.blocks.push_back(matrix_from_json(b));
      if (ip.blocks.size() + 1 != ip.breakpoints.size()) {
        throw std::invalid_argument("ito: need one block per breakpoint interval");
      }
    }
  }
  if (j.contains("search")) {
    const json& s = j.at("search");
    reject_unknown(s, {"transforms", "restarts", "sweeps", "law", "depths"}, "search");
    read(s, "transforms", c.search.transforms);
    read(s, "restarts", c.search.restarts);
    read(s, "sweeps", c.search.sweeps);
    read(s, "law", c.search.law);
    read(s, "depths", c.search.depths);
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const FamilyParams& fp = c.family;
  json blocks = json::array();
  for (const auto& b : c.ito.blocks) blocks.push_back(matrix_to_json(b));
  return {
      {"name", c.name},
      {"experiment", c.experiment},
      {"norm", norm_to_json(c.norm)},
      {"family",
       {{"name", to_string(fp.family)}, {"depth", fp.depth}, {"exhaustive", fp.exhaustive},
        {"increment_scale", fp.increment_scale}, {"tree_seed", fp.tree_seed},
        {"steps", fp.steps}, {"horizon", fp.horizon}, {"vol_schedule", fp.vol_schedule},
        {"rate", fp.rate}, {"jump_scale", fp.jump_scale}, {"grid_steps", fp.grid_steps}}},
      {"p_list", c.p_list},
      {"replications", c.replications},
      {"mc_samples", c.mc_samples},
      {"master_seed", c.master_seed},
      {"output", c.output},
      {"sub_ensembles", c.sub_ensembles},
      {"ito",
       {{"driver_dim", c.ito.driver_dim}, {"steps", c.ito.steps}, {"horizon", c.ito.horizon},
        {"qv_mode", c.ito.qv_mode == QuadVarMode::pathwise ? "pathwise" : "ensemble"},
        {"breakpoints", c.ito.breakpoints}, {"blocks", blocks},
        {"predictable_sign", c.ito.predictable_sign}}},
      {"search",
       {{"transforms", c.search.transforms}, {"restarts", c.search.restarts},
        {"sweeps", c.search.sweeps}, {"law", c.search.law}, {"depths", c.search.depths}}},
      {"dims", c.dims},
      {"steps_list", c.steps_list},
  };
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return config_from_json(json::parse(in));
}

json report_to_json(const ExperimentReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"experiment", r.experiment},
                    {"norm", r.norm},
                    {"d", r.d},
                    {"p", r.p},
                    {"family", r.family},
                    {"replications", r.replications},
                    {"lhs", estimate_to_json(r.lhs)},
                    {"rhs", estimate_to_json(r.rhs)},
                    {"ratio", estimate_to_json(r.ratio)},
                    {"envelope", {r.env_min, r.env_max}},
                    {"terminal", estimate_to_json(r.terminal)},
                    {"exact", r.exact},
                    {"degenerate", r.degenerate},
                    {"seed", r.seed},
                    {"wall_ms", r.wall_ms},
                    {"extras", r.extras}});
  }
  return {{"run_id", report.run_id},       {"wall_ms", report.wall_ms},
          {"config", config_to_json(report.config)}, {"rows", rows},
          {"summary", report.summary},     {"notes", report.notes}};
}

std::string csv_header() {
  return "experiment,norm,d,p,family,replications,lhs,lhs_stderr,rhs,rhs_stderr,ratio,"
         "ratio_stderr,env_min,env_max,seed,wall_ms";
}

std::string row_to_csv(const ReportRow& r) {
  std::ostringstream out;
  out << r.experiment << ',' << r.norm << ',' << r.d << ',' << format_double(r.p) << ','
      << r.family << ',' << r.replications << ',' << format_double(r.lhs.mean) << ','
      << format_double(r.lhs.std_error) << ',' << format_double(r.rhs.mean) << ','
      << format_double(r.rhs.std_error) << ',' << format_double(r.ratio.mean) << ','
      << format_double(r.ratio.std_error) << ',' << format_double(r.env_min) << ','
      << format_double(r.env_max) << ',' << r.seed << ',' << std::fixed << std::setprecision(3)
      << r.wall_ms;
  return out.str();
}

std::string report_to_csv(const ExperimentReport& report, bool header) {
  std::string out;
  if (header) out += csv_header() + '\n';
  for (const auto& r : report.rows) out += row_to_csv(r) + '\n';
  return out;
}

void write_report(const ExperimentReport& report, const std::string& prefix) {
  std::ofstream csv(prefix + ".csv");
  std::ofstream js(prefix + ".json");
  if (!csv || !js) throw std::runtime_error("cannot write report files at " + prefix);
  csv << report_to_csv(report);
  js << report_to_json(report).dump(2) << '\n';
}

}  // namespace bdglab
