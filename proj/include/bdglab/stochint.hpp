#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bdglab/bilinear.hpp"
#include "bdglab/martingales.hpp"
#include "bdglab/random.hpp"

namespace bdglab {

/// How the quadratic variation derivative q of a driver is assigned.
///   pathwise: q_k = ΔM̃ΔM̃ᵀ/‖ΔM̃‖², Δ[M̃]_k = ‖ΔM̃‖² (so qΔ[M̃] = ΔM̃ΔM̃ᵀ exactly)
///   ensemble: q_k = I/k, Δ[M̃]_k = k·Δt (the Brownian expectation)
enum class QuadVarMode { pathwise, ensemble };

/// A k-dimensional Euclidean driver with its scalar quadratic variation
/// increments and per-step q (index 0 unused and zero).
struct DriverPath {
  MartingalePath path;
  std::vector<double> qv_increments;
  std::vector<Eigen::MatrixXd> q;

  int dim() const { return path.dim(); }
  std::size_t steps() const { return path.steps(); }
  double qv(std::size_t upto) const;  // [M̃] at grid index `upto`
};

DriverPath make_driver(MartingalePath path, QuadVarMode mode = QuadVarMode::pathwise);

/// Gaussian walk with per-step covariance (T/K)·I_k.
DriverPath make_driver_brownian(int k, int steps, double horizon, RandomStream& rng,
                                QuadVarMode mode = QuadVarMode::pathwise);

/// A step process with d×k matrix values Φ_i on (t_{i-1}, t_i], zero outside
/// [t_0, t_n]. Values are fixed blocks, or computed from the driver history
/// up to the left endpoint of each interval.
class ElementaryProcess {
 public:
  using PredictableFn =
      std::function<Eigen::MatrixXd(std::size_t interval, std::span<const Eigen::VectorXd> history)>;

  static ElementaryProcess constant(std::vector<double> breakpoints,
                                    std::vector<Eigen::MatrixXd> blocks);
  static ElementaryProcess predictable(std::vector<double> breakpoints, int rows, int cols,
                                       PredictableFn fn);
  static ElementaryProcess zero(int rows, int cols, double horizon);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::vector<double> breakpoints() const;  // union over summands

  /// Value on each driver step (index 0 unused). Throws when a breakpoint is
  /// not on the driver grid or the shapes disagree.
  std::vector<Eigen::MatrixXd> on_grid(const DriverPath& driver) const;

  ElementaryProcess operator+(const ElementaryProcess& other) const;

 private:
  struct Term {
    std::vector<double> breakpoints;
    std::vector<Eigen::MatrixXd> blocks;  // empty when fn is used
    PredictableFn fn;
  };

  int rows_ = 0;
  int cols_ = 0;
  std::vector<Term> terms_;
};

/// (Φ·M̃)_t = Σ Φ_k (M̃_{t_k ∧ t} - M̃_{t_{k-1} ∧ t}) on the driver grid.
MartingalePath integrate(const ElementaryProcess& phi, const DriverPath& driver);

/// Σ_{steps ≤ upto} Φ q Φᵀ · Δ[M̃].
SymBilinearForm integrand_form(const ElementaryProcess& phi, const DriverPath& driver,
                               std::size_t upto);
SymBilinearForm integrand_form(const ElementaryProcess& phi, const DriverPath& driver);

struct JumpEvent {
  double time = 0.0;
  std::size_t mark = 0;
};

/// Poisson jumps with finitely many marks and an integrand F(mark, interval)
/// that is constant on each interval (s_{i-1}, s_i] of `breakpoints`.
struct MarkedJumpProcess {
  double horizon = 1.0;
  std::vector<double> intensities;                  // λ(j) per mark
  std::vector<double> breakpoints;                  // 0 = s_0 < … < s_n = horizon
  std::vector<std::vector<Eigen::VectorXd>> values; // values[mark][interval]
  std::vector<JumpEvent> events;                    // sorted by time

  int dim() const;
  const Eigen::VectorXd& integrand(std::size_t mark, double time) const;
};

/// Independent Poisson streams per mark on [0, horizon], merged by time.
std::vector<JumpEvent> simulate_marked_jumps(const std::vector<double>& intensities,
                                             double horizon, RandomStream& rng);

struct PoissonIntegral {
  MartingalePath path;   // jumps minus the exact compensator
  SymBilinearForm form;  // Σ over jumps of F Fᵀ
};

/// ∫ F dÑ on [0, t]. The path lives on the union of a uniform grid with
/// `grid_steps` steps, the integrand breakpoints and the jump times.
PoissonIntegral poisson_integrate(const MarkedJumpProcess& process, double horizon,
                                  int grid_steps = 64);

}  // namespace bdglab
