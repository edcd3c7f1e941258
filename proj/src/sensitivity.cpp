#include "fsishape/sensitivity.hpp"

namespace fsi {

namespace {

// directional derivatives of (J, G, F) at sample s in direction K
struct JgfDir {
  double dJ;
  Mat2 dG, dF;
  JgfDir(const TransformSample& s, const Mat2& k)
      : dJ(ddet(s.A, k)), dG(dcof(s.A, k)), dF(dinvcof(s.A, k)) {}
};

} // namespace

ShapeSensitivity::ShapeSensitivity(const Discretization& disc, const FsiState& state,
                                   const TransformState& ts, const ProblemData& data)
    : disc_(&disc), state_(&state), ts_(&ts), data_(data) {
  nv_ = disc.Vv.dofs();
  nq_ = disc.Qq.dofs();
  nw_ = disc.Ww.dofs();
  ns_ = disc.Ss.dofs();
  ne_ = disc.kin.ext_space().dofs();
  sample_state();
  assemble_forward();
}

void ShapeSensitivity::sample_state() {
  const auto& qp = disc_->kin.qp();
  const auto& quad = TriQuadrature::get();
  auto fgrad = data_.f.grad();
  auto ggrad = data_.g.grad();

  size_t nfq = qp.fluid_x.size();
  f_gradv.resize(nfq);
  f_ainv.resize(nfq);
  f_dft.resize(nfq);
  f_v0.resize(nfq);
  f_ft.resize(nfq);
  f_q0.resize(nfq);
  for (size_t i = 0; i < qp.fluid_tris.size(); ++i) {
    int tri = qp.fluid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      f_gradv[id] = eval_vec_grad(state_->v, tri, ref);
      f_v0[id] = eval_vec(state_->v, tri, ref);
      f_q0[id] = eval_scalar(state_->q, tri, ref);
      const auto& s = ts_->fluid[id];
      f_ainv[id] = s.A.inverse();
      f_ft[id] = data_.f.eval(s.Tx);
      f_dft[id] = Mat2(fgrad[0].eval(s.Tx.x, s.Tx.y), fgrad[1].eval(s.Tx.x, s.Tx.y),
                       fgrad[2].eval(s.Tx.x, s.Tx.y), fgrad[3].eval(s.Tx.x, s.Tx.y));
    }
  }

  g_gradv.resize(qp.g0.size());
  g_q0.resize(qp.g0.size());
  for (size_t id = 0; id < qp.g0.size(); ++id) {
    const auto& p = qp.g0[id];
    g_gradv[id] = eval_vec_grad(state_->v, p.ftri, p.fref);
    g_q0[id] = eval_scalar(state_->q, p.ftri, p.fref);
  }

  size_t nsq = qp.solid_x.size();
  s_gradw.resize(nsq);
  s_dgx.resize(nsq);
  s_w0.resize(nsq);
  s_gx.resize(nsq);
  s_s0.resize(nsq);
  for (size_t i = 0; i < qp.solid_tris.size(); ++i) {
    int tri = qp.solid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      s_gradw[id] = eval_vec_grad(state_->w, tri, ref);
      s_w0[id] = eval_vec(state_->w, tri, ref);
      s_s0[id] = eval_scalar(state_->s, tri, ref);
      Vec2 x = qp.solid_x[id];
      s_gx[id] = data_.g.eval(x);
      s_dgx[id] = Mat2(ggrad[0].eval(x.x, x.y), ggrad[1].eval(x.x, x.y),
                       ggrad[2].eval(x.x, x.y), ggrad[3].eval(x.x, x.y));
    }
  }
}

void ShapeSensitivity::assemble_forward() {
  const Discretization& disc = *disc_;
  const auto& qp = disc.kin.qp();
  const auto& ee = disc.kin.ext_space();
  const double nu = data_.nu, mu = data_.mu;
  const int n = total() - 1;
  SparseSystem sys(n);

  // fluid momentum rows
  assemble_volume_form(qp, disc.Vv, disc.Vv, sys, off_v(), off_v(),
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         if (u.comp != v.comp) return 0.0;
                         return nu * (ts_->fluid[qid].F.transpose() * u.grad).dot(v.grad);
                       });
  assemble_volume_form(qp, disc.Qq, disc.Vv, sys, off_v(), off_q(),
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         return -u.val * (ts_->fluid[qid].G * v.grad)[v.comp];
                       });
  assemble_volume_form(qp, ee, disc.Vv, sys, off_v(), off_e(),
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         Mat2 k = Mat2::outer({u.comp == 0 ? 1.0 : 0.0, u.comp == 1 ? 1.0 : 0.0},
                                              u.grad);
                         JgfDir d(ts_->fluid[qid], k);
                         Mat2 m = f_gradv[qid] * d.dF * nu - d.dG * f_q0[qid];
                         Vec2 row{m(v.comp, 0), m(v.comp, 1)};
                         double vol = row.dot(v.grad);
                         Vec2 fv = f_ft[qid];
                         Vec2 dfk = f_dft[qid] * Vec2{u.comp == 0 ? u.val : 0.0,
                                                      u.comp == 1 ? u.val : 0.0};
                         double load = (d.dJ * fv[v.comp] + ts_->fluid[qid].J * dfk[v.comp]) * v.val;
                         return vol - load;
                       });

  // fluid continuity rows
  assemble_volume_form(qp, disc.Vv, disc.Qq, sys, off_q(), off_v(),
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         return -v.val * (ts_->fluid[qid].G * u.grad)[u.comp];
                       });
  assemble_volume_form(qp, ee, disc.Qq, sys, off_q(), off_e(),
                       [&](int qid, Vec2, const TrialFn& u, const TrialFn& v) {
                         Mat2 k = Mat2::outer({u.comp == 0 ? 1.0 : 0.0, u.comp == 1 ? 1.0 : 0.0},
                                              u.grad);
                         Mat2 dg = dcof(ts_->fluid[qid].A, k);
                         return -v.val * dg.ddot(f_gradv[qid]);
                       });

  // structure momentum rows
  assemble_volume_form(qp, disc.Ww, disc.Ww, sys, off_w(), off_w(),
                       [&](int, Vec2, const TrialFn& u, const TrialFn& v) {
                         if (u.comp != v.comp) return 0.0;
                         return mu * u.grad.dot(v.grad);
                       });
  assemble_volume_form(qp, disc.Ss, disc.Ww, sys, off_w(), off_s(),
                       [&](int, Vec2, const TrialFn& u, const TrialFn& v) {
                         return -u.val * v.grad[v.comp];
                       });
  assemble_interface_matrix(qp, disc.Vv, InterfaceSide::Fluid, disc.Ww, InterfaceSide::Solid, sys,
                            off_w(), off_v(),
                            [&](int id, Vec2, Vec2 nrm, const TrialFn& u, const TrialFn& v) {
                              if (u.comp != v.comp) return 0.0;
                              return -nu * v.val * (ts_->g0[id].F.transpose() * u.grad).dot(nrm);
                            });
  assemble_interface_matrix(qp, disc.Qq, InterfaceSide::Fluid, disc.Ww, InterfaceSide::Solid, sys,
                            off_w(), off_q(),
                            [&](int id, Vec2, Vec2 nrm, const TrialFn& u, const TrialFn& v) {
                              return u.val * v.val * (ts_->g0[id].G * nrm)[v.comp];
                            });
  assemble_interface_matrix(qp, ee, InterfaceSide::Fluid, disc.Ww, InterfaceSide::Solid, sys,
                            off_w(), off_e(),
                            [&](int id, Vec2, Vec2 nrm, const TrialFn& u, const TrialFn& v) {
                              Mat2 k = Mat2::outer(
                                  {u.comp == 0 ? 1.0 : 0.0, u.comp == 1 ? 1.0 : 0.0}, u.grad);
                              JgfDir d(ts_->g0[id], k);
                              Mat2 m = g_gradv[id] * d.dF * nu - d.dG * g_q0[id];
                              return -v.val * (m * nrm)[v.comp];
                            });

  // structure continuity rows
  assemble_volume_form(qp, disc.Ww, disc.Ss, sys, off_s(), off_w(),
                       [&](int, Vec2, const TrialFn& u, const TrialFn& v) {
                         return -v.val * u.grad[u.comp];
                       });

  // extension rows: harmonic in the interior, trace-coupled on the interface,
  // pinned on the outer boundary
  const auto& bc = disc.kin.extension_bc();
  const auto& quad = TriQuadrature::get();
  ElemBasis basis;
  for (size_t i = 0; i < qp.fluid_tris.size(); ++i) {
    int tri = qp.fluid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      eval_basis(ee, tri, {quad.xi[q], quad.eta[q]}, basis);
      double w = qp.fluid_w[id];
      for (int a = 0; a < basis.n; ++a) {
        if (bc[basis.dof[a]].kind != Kinematics::BcKind::Free) continue;
        for (int b = 0; b < basis.n; ++b) {
          double val = w * basis.grad[a].dot(basis.grad[b]);
          for (int c = 0; c < 2; ++c)
            sys.add(off_e() + 2 * basis.dof[a] + c, off_e() + 2 * basis.dof[b] + c, val);
        }
      }
    }
  }
  for (size_t d = 0; d < bc.size(); ++d) {
    if (bc[d].kind == Kinematics::BcKind::Free) continue;
    for (int c = 0; c < 2; ++c) {
      int row = off_e() + 2 * static_cast<int>(d) + c;
      sys.add(row, row, 1.0);
      if (bc[d].kind == Kinematics::BcKind::OnGamma0) {
        int wd = bc[d].is_edge ? disc.Ww.edge_dof(bc[d].entity) : disc.Ww.vertex_dof(bc[d].entity);
        if (wd < 0) throw Error(ErrorCode::InvalidMesh, "interface entity not a displacement dof");
        sys.add(row, off_w() + 2 * wd + c, -1.0);
      }
    }
  }

  sys.set_gauge(disc.pressure_gauge(off_q()));
  k_ = sys.matrix();
  lu_.factor(k_);
}

void ShapeSensitivity::ensure_transpose() {
  if (lu_t_ready_) return;
  Eigen::SparseMatrix<double> kt = k_.transpose();
  lu_t_.factor(kt);
  lu_t_ready_ = true;
}

Eigen::VectorXd ShapeSensitivity::t_forcing(const ShapeVelocity& vel) const {
  const Discretization& disc = *disc_;
  const auto& qp = disc.kin.qp();
  const double nu = data_.nu, mu = data_.mu;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(total());

  // fluid momentum and continuity rows
  assemble_rhs_volume(qp, disc.Vv, r, off_v(), [&](int qid, Vec2, const TrialFn& v) {
    JgfDir d(ts_->fluid[qid], vel.fluid_grad[qid]);
    Mat2 m = f_gradv[qid] * d.dF * nu - d.dG * f_q0[qid];
    Vec2 row{m(v.comp, 0), m(v.comp, 1)};
    double vol = row.dot(v.grad);
    Vec2 dfv = f_dft[qid] * vel.fluid_val[qid];
    double load = (d.dJ * f_ft[qid][v.comp] + ts_->fluid[qid].J * dfv[v.comp]) * v.val;
    return vol - load;
  });
  assemble_rhs_volume(qp, disc.Qq, r, off_q(), [&](int qid, Vec2, const TrialFn& v) {
    Mat2 dg = dcof(ts_->fluid[qid].A, vel.fluid_grad[qid]);
    return -v.val * dg.ddot(f_gradv[qid]);
  });

  // structure rows: identity-based derivatives of the Phi_t coefficients
  assemble_rhs_volume(qp, disc.Ww, r, off_w(), [&](int qid, Vec2, const TrialFn& v) {
    const Mat2& gv = vel.solid_grad[qid];
    double divv = gv.trace();
    Mat2 df_id = Mat2::identity() * divv - 2.0 * gv.sym();
    Mat2 dg_id = Mat2::identity() * divv - gv.transpose();
    Mat2 m = s_gradw[qid] * df_id * mu - dg_id * s_s0[qid];
    Vec2 row{m(v.comp, 0), m(v.comp, 1)};
    double vol = row.dot(v.grad);
    Vec2 dgv = s_dgx[qid] * vel.solid_val[qid];
    double load = (divv * s_gx[qid][v.comp] + dgv[v.comp]) * v.val;
    return vol - load;
  });
  assemble_rhs_volume(qp, disc.Ss, r, off_s(), [&](int qid, Vec2, const TrialFn& v) {
    const Mat2& gv = vel.solid_grad[qid];
    Mat2 dg_id = Mat2::identity() * gv.trace() - gv.transpose();
    return -v.val * dg_id.ddot(s_gradw[qid]);
  });
  assemble_interface_form(qp, disc.Ww, InterfaceSide::Solid, r, off_w(),
                          [&](int id, Vec2, Vec2 nrm, const TrialFn& v) {
                            JgfDir d(ts_->g0[id], vel.g0_grad[id]);
                            Mat2 m = g_gradv[id] * d.dF * nu - d.dG * g_q0[id];
                            return -v.val * (m * nrm)[v.comp];
                          });
  return r;
}

Eigen::VectorXd ShapeSensitivity::functional_gradient(const FunctionalSpec& spec) const {
  const Discretization& disc = *disc_;
  const auto& qp = disc.kin.qp();
  const auto& quad = TriQuadrature::get();
  Eigen::VectorXd jx = Eigen::VectorXd::Zero(total());
  IntegrandPoint pt;

  // fluid integrand arguments per qp, reused across the v and e partials
  for (size_t i = 0; i < qp.fluid_tris.size(); ++i) {
    int tri = qp.fluid_tris[i];
    ElemBasis bv, be;
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      const auto& s = ts_->fluid[id];
      Mat2 gphys = f_gradv[id] * f_ainv[id];
      pt.set(s.Tx, f_v0[id], gphys);
      double jf = pt.eval(spec.jF);
      Vec2 d1 = pt.eval2(spec.d1F);
      Vec2 d2 = pt.eval2(spec.d2F);
      Mat2 d3 = pt.eval4(spec.d3F);
      double w = qp.fluid_w[id];

      eval_basis(disc.Vv, tri, ref, bv);
      for (int a = 0; a < bv.n; ++a) {
        if (bv.dof[a] < 0) continue;
        Vec2 atg = f_ainv[id].transpose() * bv.grad[a];
        for (int c = 0; c < 2; ++c) {
          Vec2 d3row{d3(c, 0), d3(c, 1)};
          jx[off_v() + 2 * bv.dof[a] + c] +=
              w * (d2[c] * bv.val[a] + d3row.dot(atg)) * s.J;
        }
      }
      eval_basis(disc.kin.ext_space(), tri, ref, be);
      Mat2 va = f_gradv[id] * f_ainv[id]; // grad v A^{-1}
      for (int a = 0; a < be.n; ++a) {
        Vec2 atg = f_ainv[id].transpose() * be.grad[a];
        for (int c = 0; c < 2; ++c) {
          Mat2 k = Mat2::outer({c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0}, be.grad[a]);
          double dj = ddet(s.A, k);
          Vec2 vac{va(0, c), va(1, c)};
          double d3term = -(vac.x * (d3(0, 0) * atg.x + d3(0, 1) * atg.y) +
                            vac.y * (d3(1, 0) * atg.x + d3(1, 1) * atg.y));
          jx[off_e() + 2 * be.dof[a] + c] +=
              w * (jf * dj + d1[c] * be.val[a] * s.J + d3term * s.J);
        }
      }
    }
  }

  for (size_t i = 0; i < qp.solid_tris.size(); ++i) {
    int tri = qp.solid_tris[i];
    ElemBasis bw;
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      pt.set(qp.solid_x[id], s_w0[id], s_gradw[id]);
      Vec2 d2 = pt.eval2(spec.d2S);
      Mat2 d3 = pt.eval4(spec.d3S);
      double w = qp.solid_w[id];
      eval_basis(disc.Ww, tri, ref, bw);
      for (int a = 0; a < bw.n; ++a) {
        if (bw.dof[a] < 0) continue;
        for (int c = 0; c < 2; ++c) {
          Vec2 d3row{d3(c, 0), d3(c, 1)};
          jx[off_w() + 2 * bw.dof[a] + c] += w * (d2[c] * bw.val[a] + d3row.dot(bw.grad[a]));
        }
      }
    }
  }
  return jx;
}

MaterialDerivatives ShapeSensitivity::solve_material_derivatives(const ShapeVelocity& vel) {
  Eigen::VectorXd rhs = -t_forcing(vel);
  Eigen::VectorXd x = lu_.solve(rhs);
  MaterialDerivatives md;
  md.vdot = DiscreteField(disc_->Vv);
  md.qdot = DiscreteField(disc_->Qq);
  md.wdot = DiscreteField(disc_->Ww);
  md.sdot = DiscreteField(disc_->Ss);
  md.edot = DiscreteField(disc_->kin.ext_space());
  md.vdot.coef = x.segment(off_v(), nv_);
  md.qdot.coef = x.segment(off_q(), nq_);
  md.wdot.coef = x.segment(off_w(), nw_);
  md.sdot.coef = x.segment(off_s(), ns_);
  md.edot.coef = x.segment(off_e(), ne_);
  return md;
}

AdjointState ShapeSensitivity::solve_adjoint(const FunctionalSpec& spec) {
  ensure_transpose();
  Eigen::VectorXd rhs = -functional_gradient(spec);
  Eigen::VectorXd y;
  try {
    y = lu_t_.solve(rhs);
  } catch (const Error& e) {
    throw Error(ErrorCode::AdjointUnavailable, e.what());
  }
  AdjointState adj;
  adj.av = DiscreteField(disc_->Vv);
  adj.aq = DiscreteField(disc_->Qq);
  adj.aw = DiscreteField(disc_->Ww);
  adj.as_ = DiscreteField(disc_->Ss);
  adj.ae = DiscreteField(disc_->kin.ext_space());
  adj.av.coef = y.segment(off_v(), nv_);
  adj.aq.coef = y.segment(off_q(), nq_);
  adj.aw.coef = y.segment(off_w(), nw_);
  adj.as_.coef = y.segment(off_s(), ns_);
  adj.ae.coef = y.segment(off_e(), ne_);
  adj.raw = std::move(y);
  return adj;
}

double ShapeSensitivity::geometric_term(const FunctionalSpec& spec, const ShapeVelocity& vel) const {
  const auto& qp = disc_->kin.qp();
  IntegrandPoint pt;
  double acc = 0.0;

  for (size_t id = 0; id < qp.fluid_x.size(); ++id) {
    const auto& s = ts_->fluid[id];
    Mat2 gphys = f_gradv[id] * f_ainv[id];
    pt.set(s.Tx, f_v0[id], gphys);
    double jf = pt.eval(spec.jF);
    Vec2 d1 = pt.eval2(spec.d1F);
    Mat2 d3 = pt.eval4(spec.d3F);
    double dj = ddet(s.A, vel.fluid_grad[id]);
    Mat2 dgarg = (gphys * vel.fluid_grad[id] * f_ainv[id]) * (-1.0);
    acc += qp.fluid_w[id] *
           (jf * dj + d1.dot(vel.fluid_val[id]) * s.J + d3.ddot(dgarg) * s.J);
  }
  for (size_t id = 0; id < qp.solid_x.size(); ++id) {
    pt.set(qp.solid_x[id], s_w0[id], s_gradw[id]);
    double js = pt.eval(spec.jS);
    Vec2 d1 = pt.eval2(spec.d1S);
    Mat2 d3 = pt.eval4(spec.d3S);
    const Mat2& gv = vel.solid_grad[id];
    Mat2 dgarg = (s_gradw[id] * gv) * (-1.0);
    acc += qp.solid_w[id] * (js * gv.trace() + d1.dot(vel.solid_val[id]) + d3.ddot(dgarg));
  }
  return acc;
}

double ShapeSensitivity::shape_derivative_direct(const FunctionalSpec& spec,
                                                 const MaterialDerivatives& md,
                                                 const ShapeVelocity& vel) const {
  const auto& qp = disc_->kin.qp();
  const auto& quad = TriQuadrature::get();
  IntegrandPoint pt;
  double acc = 0.0;

  for (size_t i = 0; i < qp.fluid_tris.size(); ++i) {
    int tri = qp.fluid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      const auto& s = ts_->fluid[id];
      Mat2 gphys = f_gradv[id] * f_ainv[id];
      pt.set(s.Tx, f_v0[id], gphys);
      double jf = pt.eval(spec.jF);
      Vec2 d1 = pt.eval2(spec.d1F);
      Vec2 d2 = pt.eval2(spec.d2F);
      Mat2 d3 = pt.eval4(spec.d3F);

      Vec2 tdot = vel.fluid_val[id] + eval_vec(md.edot, tri, ref);
      Mat2 tdot_grad = vel.fluid_grad[id] + eval_vec_grad(md.edot, tri, ref);
      Vec2 vdot = eval_vec(md.vdot, tri, ref);
      Mat2 vdot_grad = eval_vec_grad(md.vdot, tri, ref);

      double dj = ddet(s.A, tdot_grad);
      Mat2 darg = (vdot_grad - gphys * tdot_grad) * f_ainv[id];
      acc += qp.fluid_w[id] * (jf * dj + d1.dot(tdot) * s.J + d2.dot(vdot) * s.J +
                               d3.ddot(darg) * s.J);
    }
  }

  for (size_t i = 0; i < qp.solid_tris.size(); ++i) {
    int tri = qp.solid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      pt.set(qp.solid_x[id], s_w0[id], s_gradw[id]);
      double js = pt.eval(spec.jS);
      Vec2 d1 = pt.eval2(spec.d1S);
      Vec2 d2 = pt.eval2(spec.d2S);
      Mat2 d3 = pt.eval4(spec.d3S);

      Vec2 wdot = eval_vec(md.wdot, tri, ref);
      Mat2 wdot_grad = eval_vec_grad(md.wdot, tri, ref);
      const Mat2& gv = vel.solid_grad[id];
      Mat2 darg = wdot_grad - s_gradw[id] * gv;
      acc += qp.solid_w[id] * (js * gv.trace() + d1.dot(vel.solid_val[id]) + d2.dot(wdot) +
                               d3.ddot(darg));
    }
  }
  return acc;
}

double ShapeSensitivity::shape_derivative_adjoint(const FunctionalSpec& spec,
                                                  const AdjointState& adj,
                                                  const ShapeVelocity& vel) const {
  Eigen::VectorXd r = t_forcing(vel);
  return geometric_term(spec, vel) + r.dot(adj.raw);
}

} // namespace fsi
