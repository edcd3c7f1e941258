#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "fsishape/error.hpp"

namespace fsi {

// Square sparse system with optional scalar mean-value constraint row/column
// (pressure gauge). Deterministic direct factorization.
class SparseSystem {
public:
  explicit SparseSystem(int n) : n_(n), rhs_(Eigen::VectorXd::Zero(n)) {}

  int unknowns() const { return n_; }

  void add(int row, int col, double v) { triplets_.emplace_back(row, col, v); }
  void add_rhs(int row, double v) { rhs_[row] += v; }
  Eigen::VectorXd& rhs() { return rhs_; }

  // Appends one Lagrange-multiplier unknown enforcing sum(w_i x_i) = 0,
  // entering symmetrically in the listed rows.
  void set_gauge(std::vector<std::pair<int, double>> weights) { gauge_ = std::move(weights); }
  bool has_gauge() const { return !gauge_.empty(); }

  Eigen::SparseMatrix<double> matrix() const; // bordered if gauge present

  // Solves and returns the first n unknowns (gauge multiplier dropped).
  Eigen::VectorXd solve() const;

private:
  int n_;
  std::vector<Eigen::Triplet<double>> triplets_;
  Eigen::VectorXd rhs_;
  std::vector<std::pair<int, double>> gauge_;
};

// Cached LU factorization of a sparse matrix with one step of iterative
// refinement on every solve.
class LuSolver {
public:
  void factor(const Eigen::SparseMatrix<double>& a);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  bool ready() const { return ready_; }

private:
  Eigen::SparseMatrix<double> a_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool ready_ = false;
};

} // namespace fsi
