#include "fsishape/sparse.hpp"

namespace fsi {

Eigen::SparseMatrix<double> SparseSystem::matrix() const {
  int total = n_ + (has_gauge() ? 1 : 0);
  Eigen::SparseMatrix<double> a(total, total);
  std::vector<Eigen::Triplet<double>> trip = triplets_;
  for (const auto& [dof, w] : gauge_) {
    trip.emplace_back(n_, dof, w);
    trip.emplace_back(dof, n_, w);
  }
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

Eigen::VectorXd SparseSystem::solve() const {
  Eigen::SparseMatrix<double> a = matrix();
  Eigen::VectorXd b = rhs_;
  if (has_gauge()) {
    b.conservativeResize(n_ + 1);
    b[n_] = 0.0;
  }
  LuSolver lu;
  lu.factor(a);
  Eigen::VectorXd x = lu.solve(b);
  double bn = b.norm();
  double res = (a * x - b).norm();
  if (!(res <= 1e-10 * (bn > 0 ? bn : 1.0)))
    throw Error(ErrorCode::SingularSystem,
                "solver residual " + std::to_string(res) + " too large (rhs norm " +
                    std::to_string(bn) + ")");
  return x.head(n_);
}

void LuSolver::factor(const Eigen::SparseMatrix<double>& a) {
  a_ = a;
  a_.makeCompressed();
  lu_.compute(a_);
  if (lu_.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "factorization failed: " + lu_.lastErrorMessage());
  ready_ = true;
}

Eigen::VectorXd LuSolver::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = lu_.solve(b);
  Eigen::VectorXd r = b - a_ * x;
  x += lu_.solve(r);
  return x;
}

} // namespace fsi
