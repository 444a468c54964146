#include "bdglab/quadvar.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bdglab/errors.hpp"

namespace bdglab {

SymBilinearForm covariation_form(const MartingalePath& m, std::size_t upto) {
  if (upto > m.steps()) {
    throw std::out_of_range("covariation_form: upto " + std::to_string(upto) +
                            " exceeds the path's " + std::to_string(m.steps()) + " steps");
  }
  SymBilinearForm v = SymBilinearForm::zero(m.dim());
  for (std::size_t j = 1; j <= upto; ++j) v.add_rank_one(m.values[j] - m.values[j - 1]);
  return v;
}

SymBilinearForm covariation_form(const MartingalePath& m) {
  return covariation_form(m, m.steps());
}

CovariationProcess covariation_process(const MartingalePath& m) {
  CovariationProcess p;
  p.times = m.times;
  p.forms.reserve(m.values.size());
  SymBilinearForm v = SymBilinearForm::zero(m.dim());
  p.forms.push_back(v);
  for (std::size_t j = 1; j < m.values.size(); ++j) {
    v.add_rank_one(m.values[j] - m.values[j - 1]);
    p.forms.push_back(v);
  }
  return p;
}

Eigen::MatrixXd pairwise_covariation(const MartingalePath& m, const MartingalePath& n,
                                     std::size_t upto) {
  if (m.times != n.times) throw std::invalid_argument("pairwise_covariation: grids differ");
  if (upto > m.steps()) throw std::out_of_range("pairwise_covariation: upto exceeds the grid");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m.dim(), n.dim());
  for (std::size_t j = 1; j <= upto; ++j) {
    c.noalias() += (m.values[j] - m.values[j - 1]) * (n.values[j] - n.values[j - 1]).transpose();
  }
  return c;
}

SymBilinearForm jump_covariation(const MartingalePath& m) {
  SymBilinearForm v = SymBilinearForm::zero(m.dim());
  if (m.jumps) {
    for (const auto& j : m.jumps->sizes) v.add_rank_one(j);
  }
  return v;
}

namespace {

double quadratic_sum(const MartingalePath& m, const std::vector<std::size_t>& indices,
                     const Eigen::VectorXd& xstar) {
  double s = 0.0;
  for (std::size_t i = 1; i < indices.size(); ++i) {
    const double step = xstar.dot(m.values[indices[i]] - m.values[indices[i - 1]]);
    s += step * step;
  }
  return s;
}

}  // namespace

std::vector<double> refinement_convergence(const MartingalePath& fine,
                                           const std::vector<std::vector<double>>& coarsenings,
                                           const Eigen::VectorXd& xstar) {
  require_dim("refinement_convergence", fine.dim(), xstar.size());
  std::vector<std::size_t> all(fine.times.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const double reference = quadratic_sum(fine, all, xstar);

  std::vector<double> errors;
  errors.reserve(coarsenings.size());
  for (const auto& grid : coarsenings) {
    if (grid.empty() || grid.front() != fine.times.front() || grid.back() != fine.times.back()) {
      throw std::invalid_argument("refinement_convergence: coarse grid must share both endpoints");
    }
    std::vector<std::size_t> indices;
    indices.reserve(grid.size());
    std::size_t cursor = 0;
    for (double t : grid) {
      auto it = std::lower_bound(fine.times.begin() + static_cast<std::ptrdiff_t>(cursor),
                                 fine.times.end(), t);
      if (it == fine.times.end() || *it != t) {
        throw std::invalid_argument("refinement_convergence: coarse grid is not nested in the fine grid");
      }
      cursor = static_cast<std::size_t>(it - fine.times.begin());
      if (!indices.empty() && cursor <= indices.back()) {
        throw std::invalid_argument("refinement_convergence: coarse grid must be increasing");
      }
      indices.push_back(cursor);
    }
    errors.push_back(std::abs(quadratic_sum(fine, indices, xstar) - reference));
  }
  return errors;
}

std::vector<double> dyadic_subgrid(const MartingalePath& fine, int level) {
  const std::size_t stride = std::size_t{1} << level;
  const std::size_t steps = fine.steps();
  if (steps % stride != 0) {
    throw std::invalid_argument("dyadic_subgrid: step count not divisible by 2^level");
  }
  std::vector<double> grid;
  for (std::size_t k = 0; k <= steps; k += stride) grid.push_back(fine.times[k]);
  return grid;
}

double min_increment_gap(const CovariationProcess& process) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < process.forms.size(); ++k) {
    gap = std::min(gap, psd_gap(process.forms[k], process.forms[k - 1]));
  }
  return gap;
}

std::string covariation_to_csv(const std::vector<CovariationProcess>& processes, bool header) {
  std::ostringstream out;
  out << std::setprecision(17);
  const int d = processes.empty() || processes.front().forms.empty()
                    ? 0
                    : processes.front().forms.front().dim();
  if (header) {
    out << "replication,k";
    for (int i = 1; i <= d; ++i) {
      for (int j = 1; j <= d; ++j) out << ",m_" << i << '_' << j;
    }
    out << '\n';
  }
  for (std::size_t r = 0; r < processes.size(); ++r) {
    const auto& forms = processes[r].forms;
    for (std::size_t k = 0; k < forms.size(); ++k) {
      out << r << ',' << k;
      const auto& mat = forms[k].matrix();
      for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        for (Eigen::Index j = 0; j < mat.cols(); ++j) out << ',' << mat(i, j);
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace bdglab
