#include "bdglab/stochint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bdglab/errors.hpp"

namespace bdglab {

double DriverPath::qv(std::size_t upto) const {
  double s = 0.0;
  for (std::size_t j = 1; j <= upto; ++j) s += qv_increments.at(j);
  return s;
}

DriverPath make_driver(MartingalePath path, QuadVarMode mode) {
  DriverPath driver;
  const int k = path.dim();
  const std::size_t steps = path.steps();
  driver.qv_increments.assign(steps + 1, 0.0);
  driver.q.assign(steps + 1, Eigen::MatrixXd::Zero(k, k));
  for (std::size_t j = 1; j <= steps; ++j) {
    if (mode == QuadVarMode::pathwise) {
      const Eigen::VectorXd delta = path.values[j] - path.values[j - 1];
      const double sq = delta.squaredNorm();
      driver.qv_increments[j] = sq;
      if (sq > 0.0) driver.q[j] = delta * delta.transpose() / sq;
    } else {
      driver.qv_increments[j] = k * (path.times[j] - path.times[j - 1]);
      driver.q[j] = Eigen::MatrixXd::Identity(k, k) / k;
    }
  }
  driver.path = std::move(path);
  return driver;
}

DriverPath make_driver_brownian(int k, int steps, double horizon, RandomStream& rng,
                                QuadVarMode mode) {
  if (k < 1) throw std::invalid_argument("make_driver_brownian: k must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("make_driver_brownian: horizon must be positive");
  const double dt = horizon / steps;
  MartingalePath path =
      gen_gaussian_walk(steps, {SymBilinearForm(dt * Eigen::MatrixXd::Identity(k, k))}, rng, dt);
  path.family = Family::brownian_proxy;
  path.times.back() = horizon;
  return make_driver(std::move(path), mode);
}

namespace {

void check_breakpoints(const std::vector<double>& b) {
  if (b.size() < 2) throw std::invalid_argument("ElementaryProcess: need at least two breakpoints");
  for (std::size_t i = 1; i < b.size(); ++i) {
    if (!(b[i] > b[i - 1])) {
      throw std::invalid_argument("ElementaryProcess: breakpoints must be strictly increasing");
    }
  }
}

std::size_t grid_index(const std::vector<double>& times, double t) {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  auto it = std::lower_bound(times.begin(), times.end(), t - tol);
  if (it == times.end() || std::abs(*it - t) > tol) {
    throw std::invalid_argument("ElementaryProcess: breakpoint " + std::to_string(t) +
                                " is not on the driver grid");
  }
  return static_cast<std::size_t>(it - times.begin());
}

}  // namespace

ElementaryProcess ElementaryProcess::constant(std::vector<double> breakpoints,
                                              std::vector<Eigen::MatrixXd> blocks) {
  check_breakpoints(breakpoints);
  if (blocks.size() != breakpoints.size() - 1) {
    throw std::invalid_argument("ElementaryProcess: need one block per interval");
  }
  ElementaryProcess phi;
  phi.rows_ = static_cast<int>(blocks.front().rows());
  phi.cols_ = static_cast<int>(blocks.front().cols());
  for (const auto& b : blocks) {
    if (b.rows() != phi.rows_ || b.cols() != phi.cols_) {
      throw std::invalid_argument("ElementaryProcess: blocks must share one shape");
    }
  }
  phi.terms_.push_back({std::move(breakpoints), std::move(blocks), {}});
  return phi;
}

ElementaryProcess ElementaryProcess::predictable(std::vector<double> breakpoints, int rows,
                                                 int cols, PredictableFn fn) {
  check_breakpoints(breakpoints);
  ElementaryProcess phi;
  phi.rows_ = rows;
  phi.cols_ = cols;
  phi.terms_.push_back({std::move(breakpoints), {}, std::move(fn)});
  return phi;
}

ElementaryProcess ElementaryProcess::zero(int rows, int cols, double horizon) {
  return constant({0.0, horizon}, {Eigen::MatrixXd::Zero(rows, cols)});
}

std::vector<double> ElementaryProcess::breakpoints() const {
  std::vector<double> all;
  for (const auto& t : terms_) all.insert(all.end(), t.breakpoints.begin(), t.breakpoints.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::vector<Eigen::MatrixXd> ElementaryProcess::on_grid(const DriverPath& driver) const {
  require_dim("ElementaryProcess columns vs driver", cols_, driver.dim());
  const auto& times = driver.path.times;
  std::vector<Eigen::MatrixXd> out(times.size(), Eigen::MatrixXd::Zero(rows_, cols_));
  for (const auto& term : terms_) {
    std::vector<std::size_t> idx;
    idx.reserve(term.breakpoints.size());
    for (double t : term.breakpoints) idx.push_back(grid_index(times, t));
    for (std::size_t i = 1; i < idx.size(); ++i) {
      Eigen::MatrixXd value;
      if (term.fn) {
        value = term.fn(i - 1, std::span<const Eigen::VectorXd>(driver.path.values.data(),
                                                                 idx[i - 1] + 1));
        if (value.rows() != rows_ || value.cols() != cols_) {
          throw std::invalid_argument("ElementaryProcess: predictable value has the wrong shape");
        }
      } else {
        value = term.blocks[i - 1];
      }
      for (std::size_t j = idx[i - 1] + 1; j <= idx[i]; ++j) out[j] += value;
    }
  }
  return out;
}

ElementaryProcess ElementaryProcess::operator+(const ElementaryProcess& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw std::invalid_argument("ElementaryProcess: shapes differ in sum");
  }
  ElementaryProcess sum = *this;
  sum.terms_.insert(sum.terms_.end(), other.terms_.begin(), other.terms_.end());
  return sum;
}

MartingalePath integrate(const ElementaryProcess& phi, const DriverPath& driver) {
  const auto values = phi.on_grid(driver);
  MartingalePath out;
  out.family = Family::transformed;
  out.times = driver.path.times;
  out.values.resize(out.times.size());
  out.values[0] = Eigen::VectorXd::Zero(phi.rows());
  for (std::size_t j = 1; j < out.values.size(); ++j) {
    out.values[j] =
        out.values[j - 1] + values[j] * (driver.path.values[j] - driver.path.values[j - 1]);
  }
  return out;
}

SymBilinearForm integrand_form(const ElementaryProcess& phi, const DriverPath& driver,
                               std::size_t upto) {
  if (upto > driver.steps()) throw std::out_of_range("integrand_form: upto exceeds the grid");
  const auto values = phi.on_grid(driver);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(phi.rows(), phi.rows());
  for (std::size_t j = 1; j <= upto; ++j) {
    acc.noalias() += driver.qv_increments[j] * (values[j] * driver.q[j] * values[j].transpose());
  }
  return SymBilinearForm(0.5 * (acc + acc.transpose()));
}

SymBilinearForm integrand_form(const ElementaryProcess& phi, const DriverPath& driver) {
  return integrand_form(phi, driver, driver.steps());
}

int MarkedJumpProcess::dim() const {
  return values.empty() || values.front().empty() ? 0
                                                  : static_cast<int>(values.front().front().size());
}

const Eigen::VectorXd& MarkedJumpProcess::integrand(std::size_t mark, double time) const {
  // Interval i covers (s_{i-1}, s_i]; time 0 belongs to the first interval.
  auto it = std::lower_bound(breakpoints.begin() + 1, breakpoints.end(), time);
  if (it == breakpoints.end()) throw std::out_of_range("MarkedJumpProcess: time beyond horizon");
  const auto interval = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
  return values.at(mark).at(interval);
}

std::vector<JumpEvent> simulate_marked_jumps(const std::vector<double>& intensities,
                                             double horizon, RandomStream& rng) {
  std::vector<JumpEvent> events;
  for (std::size_t j = 0; j < intensities.size(); ++j) {
    if (intensities[j] < 0.0) throw std::invalid_argument("simulate_marked_jumps: negative intensity");
    if (intensities[j] == 0.0) continue;
    for (double t = rng.exponential(intensities[j]); t < horizon;
         t += rng.exponential(intensities[j])) {
      events.push_back({t, j});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; });
  return events;
}

PoissonIntegral poisson_integrate(const MarkedJumpProcess& process, double horizon,
                                  int grid_steps) {
  if (horizon > process.horizon) {
    throw std::invalid_argument("poisson_integrate: horizon exceeds the process horizon");
  }
  if (!(horizon > 0.0) || grid_steps < 1) {
    throw std::invalid_argument("poisson_integrate: need positive horizon and grid_steps");
  }
  const auto& s = process.breakpoints;
  if (s.size() < 2 || s.front() != 0.0 || s.back() != process.horizon) {
    throw std::invalid_argument("poisson_integrate: breakpoints must span [0, horizon]");
  }
  if (process.values.size() != process.intensities.size()) {
    throw std::invalid_argument("poisson_integrate: need integrand values for every mark");
  }
  for (const auto& per_mark : process.values) {
    if (per_mark.size() != s.size() - 1) {
      throw std::invalid_argument("poisson_integrate: need one vector per mark and interval");
    }
  }
  const int d = process.dim();

  std::vector<double> times;
  for (int k = 0; k <= grid_steps; ++k) times.push_back(horizon * k / grid_steps);
  times.back() = horizon;
  for (double b : s) {
    if (b < horizon) times.push_back(b);
  }
  for (const auto& e : process.events) {
    if (e.time <= horizon) times.push_back(e.time);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  // Compensator rate on each interval: Σ_j λ(j) F(j, ·).
  std::vector<Eigen::VectorXd> drift(s.size() - 1, Eigen::VectorXd::Zero(d));
  for (std::size_t j = 0; j < process.intensities.size(); ++j) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      require_dim("poisson_integrate integrand", d, process.values[j][i].size());
      drift[i] += process.intensities[j] * process.values[j][i];
    }
  }

  PoissonIntegral out;
  out.form = SymBilinearForm::zero(d);
  MartingalePath& m = out.path;
  m.family = Family::compound_poisson;
  m.times = times;
  m.values.assign(times.size(), Eigen::VectorXd::Zero(d));
  JumpRecord record;
  std::size_t next = 0;
  std::size_t interval = 0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    // Grid steps never straddle a breakpoint, so one drift rate applies.
    while (interval + 2 < s.size() && s[interval + 1] <= times[k - 1]) ++interval;
    m.values[k] = m.values[k - 1] - (times[k] - times[k - 1]) * drift[interval];
    Eigen::VectorXd jump = Eigen::VectorXd::Zero(d);
    bool jumped = false;
    while (next < process.events.size() && process.events[next].time == times[k]) {
      const auto& f = process.integrand(process.events[next].mark, times[k]);
      jump += f;
      out.form.add_rank_one(f);
      jumped = true;
      ++next;
    }
    if (jumped) {
      m.values[k] += jump;
      record.steps.push_back(k);
      record.sizes.push_back(jump);
    }
  }
  m.jumps = std::move(record);
  return out;
}

}  // namespace bdglab
