#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "bdglab/bilinear.hpp"
#include "bdglab/martingales.hpp"

namespace bdglab {

/// Running covariation form [[M]] on the path grid; forms[0] = 0.
struct CovariationProcess {
  std::vector<double> times;
  std::vector<SymBilinearForm> forms;
};

/// Σ_{j ≤ upto} ΔM_j ΔM_jᵀ.
SymBilinearForm covariation_form(const MartingalePath& m, std::size_t upto);
SymBilinearForm covariation_form(const MartingalePath& m);  // upto = K

CovariationProcess covariation_process(const MartingalePath& m);

/// Σ_{j ≤ upto} ΔM_j ΔN_jᵀ, unsymmetrized. Throws if the grids differ.
Eigen::MatrixXd pairwise_covariation(const MartingalePath& m, const MartingalePath& n,
                                     std::size_t upto);

/// Σ over recorded jumps of ΔM ΔMᵀ (zero form when there are none).
SymBilinearForm jump_covariation(const MartingalePath& m);

/// |V_coarse(x*, x*) - V_fine(x*, x*)| for each coarsening, where V_coarse
/// sums squared increments of M sampled on the coarse grid. Every coarse grid
/// must be a subset of the fine grid containing both of its endpoints.
std::vector<double> refinement_convergence(const MartingalePath& fine,
                                           const std::vector<std::vector<double>>& coarsenings,
                                           const Eigen::VectorXd& xstar);

/// Every dyadic 2^level-th grid index of the fine path, as times.
std::vector<double> dyadic_subgrid(const MartingalePath& fine, int level);

/// Smallest psd_gap between consecutive forms of the process.
double min_increment_gap(const CovariationProcess& process);

/// CSV rows "replication,k,m_11..m_dd" (row-major).
std::string covariation_to_csv(const std::vector<CovariationProcess>& processes,
                               bool header = true);

}  // namespace bdglab
