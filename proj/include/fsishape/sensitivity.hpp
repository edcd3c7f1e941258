#pragma once

#include "fsishape/functional.hpp"

namespace fsi {

struct MaterialDerivatives {
  DiscreteField vdot, qdot, wdot, sdot;
  DiscreteField edot; // material derivative of the lifted extension
};

struct AdjointState {
  DiscreteField av, aq, aw, as_;
  DiscreteField ae; // extension adjoint
  Eigen::VectorXd raw;
};

// Discrete shape-sensitivity engine around one converged solve: the exact
// linearization of the discrete residual in all state unknowns (velocity,
// pressure, displacement, multiplier, extension), its transpose for the
// adjoint route, and the t-derivative forcing of the domain perturbation.
// Direct and adjoint shape derivatives contract the same operators, so they
// agree to solver precision.
class ShapeSensitivity {
public:
  ShapeSensitivity(const Discretization& disc, const FsiState& state, const TransformState& ts,
                   const ProblemData& data);

  // Block layout of the monolithic unknown vector.
  int off_v() const { return 0; }
  int off_q() const { return nv_; }
  int off_w() const { return nv_ + nq_; }
  int off_s() const { return nv_ + nq_ + nw_; }
  int off_e() const { return nv_ + nq_ + nw_ + ns_; }
  int total() const { return nv_ + nq_ + nw_ + ns_ + ne_ + 1; } // + pressure gauge

  const Eigen::SparseMatrix<double>& forward_matrix() const { return k_; }

  // d/dt of the discrete residual rows at t = 0 for direction V.
  Eigen::VectorXd t_forcing(const ShapeVelocity& v) const;
  // Partials of the functional with respect to the state unknowns.
  Eigen::VectorXd functional_gradient(const FunctionalSpec& spec) const;

  MaterialDerivatives solve_material_derivatives(const ShapeVelocity& v);
  AdjointState solve_adjoint(const FunctionalSpec& spec);

  double shape_derivative_direct(const FunctionalSpec& spec, const MaterialDerivatives& md,
                                 const ShapeVelocity& v) const;
  double shape_derivative_adjoint(const FunctionalSpec& spec, const AdjointState& adj,
                                  const ShapeVelocity& v) const;

  // Geometric part of the derivative (the functional's own t-dependence).
  double geometric_term(const FunctionalSpec& spec, const ShapeVelocity& v) const;

private:
  const Discretization* disc_;
  const FsiState* state_;
  const TransformState* ts_;
  ProblemData data_;
  int nv_, nq_, nw_, ns_, ne_;

  // state samples at quadrature points
  std::vector<Mat2> f_gradv, f_ainv, f_dft; // fluid volume
  std::vector<Vec2> f_v0, f_ft;
  std::vector<double> f_q0;
  std::vector<Mat2> g_gradv; // interface, fluid side
  std::vector<double> g_q0;
  std::vector<Mat2> s_gradw, s_dgx; // solid volume
  std::vector<Vec2> s_w0, s_gx;
  std::vector<double> s_s0;

  Eigen::SparseMatrix<double> k_;
  LuSolver lu_;
  LuSolver lu_t_;
  bool lu_t_ready_ = false;

  void sample_state();
  void assemble_forward();
  void ensure_transpose();
};

// Spec-level wrappers.
inline MaterialDerivatives solve_material_derivatives(ShapeSensitivity& ss,
                                                      const ShapeVelocity& v) {
  return ss.solve_material_derivatives(v);
}
inline AdjointState solve_adjoint(ShapeSensitivity& ss, const FunctionalSpec& spec) {
  return ss.solve_adjoint(spec);
}
inline double shape_derivative_direct(const ShapeSensitivity& ss, const FunctionalSpec& spec,
                                      const MaterialDerivatives& md, const ShapeVelocity& v) {
  return ss.shape_derivative_direct(spec, md, v);
}
inline double shape_derivative_adjoint(const ShapeSensitivity& ss, const FunctionalSpec& spec,
                                       const AdjointState& adj, const ShapeVelocity& v) {
  return ss.shape_derivative_adjoint(spec, adj, v);
}

} // namespace fsi
