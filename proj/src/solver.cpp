#include "fsishape/solver.hpp"

#include <cmath>

namespace fsi {

std::vector<std::pair<int, double>> Discretization::pressure_gauge(int q_offset) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(Qq.dofs());
  assemble_rhs_volume(kin.qp(), Qq, c, 0,
                      [](int, Vec2, const TrialFn& v) { return v.val; });
  std::vector<std::pair<int, double>> gauge;
  gauge.reserve(c.size());
  for (int i = 0; i < c.size(); ++i) gauge.emplace_back(q_offset + i, c[i]);
  return gauge;
}

std::pair<DiscreteField, DiscreteField> solve_perturbed_stokes(const Discretization& disc,
                                                               const TransformState& ts,
                                                               const ProblemData& data) {
  const auto& qp = disc.kin.qp();
  const int nv = disc.Vv.dofs(), nq = disc.Qq.dofs();
  SparseSystem sys(nv + nq);
  const double nu = data.nu;

  assemble_volume_form(qp, disc.Vv, disc.Vv, sys, 0, 0,
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         if (u.comp != v.comp) return 0.0;
                         return nu * (ts.fluid[qid].F.transpose() * u.grad).dot(v.grad);
                       });
  assemble_volume_form(qp, disc.Qq, disc.Vv, sys, 0, nv,
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         return -u.val * (ts.fluid[qid].G * v.grad)[v.comp];
                       });
  assemble_volume_form(qp, disc.Vv, disc.Qq, sys, nv, 0,
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         return -v.val * (ts.fluid[qid].G * u.grad)[u.comp];
                       });
  assemble_rhs_volume(qp, disc.Vv, sys.rhs(), 0, [&](int qid, Vec2, const TrialFn& v) {
    const auto& s = ts.fluid[qid];
    Vec2 fval = data.f.eval(s.Tx);
    return s.J * fval[v.comp] * v.val;
  });
  sys.set_gauge(disc.pressure_gauge(nv));

  Eigen::VectorXd x = sys.solve();
  DiscreteField v(disc.Vv), q(disc.Qq);
  v.coef = x.head(nv);
  q.coef = x.segment(nv, nq);
  return {std::move(v), std::move(q)};
}

std::vector<Vec2> interface_traction(const Discretization& disc, const TransformState& ts,
                                     const DiscreteField& v, const DiscreteField& q, double nu) {
  const auto& qp = disc.kin.qp();
  std::vector<Vec2> out(qp.g0.size());
  for (size_t id = 0; id < qp.g0.size(); ++id) {
    const auto& p = qp.g0[id];
    Mat2 gv = eval_vec_grad(v, p.ftri, p.fref);
    double qv = eval_scalar(q, p.ftri, p.fref);
    const auto& s = ts.g0[id];
    out[id] = (gv * s.F) * p.n * nu - (s.G * p.n) * qv;
  }
  return out;
}

std::pair<DiscreteField, DiscreteField> solve_structure_mixed(const Discretization& disc,
                                                              const std::vector<Vec2>& traction,
                                                              const ProblemData& data,
                                                              const SolidMap& phi) {
  const auto& qp = disc.kin.qp();
  const int nw = disc.Ww.dofs(), ns = disc.Ss.dofs();
  SparseSystem sys(nw + ns);
  const double mu = data.mu;

  assemble_volume_form(qp, disc.Ww, disc.Ww, sys, 0, 0,
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         if (u.comp != v.comp) return 0.0;
                         return mu * (phi.qp[qid].F.transpose() * u.grad).dot(v.grad);
                       });
  assemble_volume_form(qp, disc.Ss, disc.Ww, sys, 0, nw,
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         return -u.val * (phi.qp[qid].G * v.grad)[v.comp];
                       });
  assemble_volume_form(qp, disc.Ww, disc.Ss, sys, nw, 0,
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         return -v.val * (phi.qp[qid].G * u.grad)[u.comp];
                       });
  assemble_rhs_volume(qp, disc.Ww, sys.rhs(), 0, [&](int qid, Vec2, const TrialFn& v) {
    const auto& s = phi.qp[qid];
    Vec2 gval = data.g.eval(s.Tx);
    return s.J * gval[v.comp] * v.val;
  });
  assemble_interface_form(qp, disc.Ww, InterfaceSide::Solid, sys.rhs(), 0,
                          [&](int id, Vec2, Vec2, const TrialFn& v) {
                            return traction[id][v.comp] * v.val;
                          });

  Eigen::VectorXd x = sys.solve();
  DiscreteField w(disc.Ww), s(disc.Ss);
  w.coef = x.head(nw);
  s.coef = x.segment(nw, ns);
  return {std::move(w), std::move(s)};
}

FsiResult run_fixed_point(const Discretization& disc, const ProblemData& data,
                          const SolverSettings& settings, const ShapeVelocity* velocity,
                          double t) {
  data.validate();
  settings.validate();
  FsiResult res;
  res.state.v = DiscreteField(disc.Vv);
  res.state.q = DiscreteField(disc.Qq);
  res.state.w = DiscreteField(disc.Ww);
  res.state.s = DiscreteField(disc.Ss);

  SolidMap phi;
  try {
    phi = disc.kin.solid_map(velocity, t, settings.j_min);
  } catch (const Error& e) {
    res.status = SolveStatus::NoninvertibleTransform;
    res.message = e.what();
    return res;
  }

  DiscreteField b(disc.Ww);
  double prev_incr = std::nan("");
  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    TransformState ts;
    try {
      ts = disc.kin.build_transform(b, velocity, t, settings.j_min);
    } catch (const Error& e) {
      res.status = SolveStatus::NoninvertibleTransform;
      res.message = e.what();
      res.iterations = iter - 1;
      return res;
    }

    auto [v, q] = solve_perturbed_stokes(disc, ts, data);
    auto traction = interface_traction(disc, ts, v, q, data.nu);
    auto [w, s] = solve_structure_mixed(disc, traction, data, phi);

    DiscreteField bnext(disc.Ww);
    bnext.coef = b.coef * (1.0 - settings.damping) + w.coef * settings.damping;
    DiscreteField diff(disc.Ww);
    diff.coef = bnext.coef - b.coef;
    double incr = h1_norm(diff);
    double rate = std::isnan(prev_incr) || prev_incr == 0.0 ? std::nan("") : incr / prev_incr;
    res.trace.push_back({iter, incr, rate, ts.j_min});
    prev_incr = incr;

    double bnorm = h1_norm(b);
    res.iterations = iter;
    res.final_increment = incr;
    if (incr <= settings.tol_abs + settings.tol_rel * bnorm) {
      res.status = SolveStatus::Converged;
      res.state.v = std::move(v);
      res.state.q = std::move(q);
      res.state.w = b; // converged iterate that generated the fluid solve
      res.state.s = std::move(s);
      res.ts = std::move(ts);
      return res;
    }
    b = std::move(bnext);
  }

  res.status = SolveStatus::MaxIterExceeded;
  char buf[96];
  std::snprintf(buf, sizeof buf, "no convergence in %d iterations, last increment %.3e",
                settings.max_iter, res.final_increment);
  res.message = buf;
  return res;
}

FsiResult fsi_fixed_point(const Discretization& disc, const ProblemData& data,
                          const SolverSettings& settings) {
  FsiResult res = run_fixed_point(disc, data, settings);
  if (res.status == SolveStatus::MaxIterExceeded)
    throw Error(ErrorCode::MaxIterExceeded, res.message);
  if (res.status == SolveStatus::NoninvertibleTransform)
    throw Error(ErrorCode::NoninvertibleTransform, res.message);
  return res;
}

} // namespace fsi
