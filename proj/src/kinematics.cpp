#include "fsishape/kinematics.hpp"

#include <cmath>

namespace fsi {

QpTables::QpTables(const Mesh& mesh) : mesh(&mesh) {
  const auto& quad = TriQuadrature::get();
  fluid_pos_.assign(mesh.tris.size(), -1);
  solid_pos_.assign(mesh.tris.size(), -1);
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    bool fluid = mesh.tris[t].region == Region::Fluid;
    auto& tris = fluid ? fluid_tris : solid_tris;
    auto& pos = fluid ? fluid_pos_ : solid_pos_;
    pos[t] = static_cast<int>(tris.size());
    tris.push_back(static_cast<int>(t));
  }
  auto fill = [&](const std::vector<int>& tris, std::vector<TriGeom>& geom,
                  std::vector<Vec2>& xs, std::vector<double>& ws) {
    geom.reserve(tris.size());
    xs.resize(tris.size() * quad.n);
    ws.resize(tris.size() * quad.n);
    for (size_t i = 0; i < tris.size(); ++i) {
      TriGeom g = tri_geom(mesh, tris[i]);
      geom.push_back(g);
      for (int q = 0; q < quad.n; ++q) {
        Vec2 ref{quad.xi[q], quad.eta[q]};
        xs[i * quad.n + q] = g.p0 + g.jac * ref;
        ws[i * quad.n + q] = quad.w[q] * g.area;
      }
    }
  };
  fill(fluid_tris, fluid_geom, fluid_x, fluid_w);
  fill(solid_tris, solid_geom, solid_x, solid_w);

  const auto& eq = EdgeQuadrature::get();
  for (size_t i = 0; i < mesh.bedges.size(); ++i)
    if (mesh.bedges[i].tag == BoundaryTag::Gamma0) g0_bedges.push_back(static_cast<int>(i));
  g0.resize(g0_bedges.size() * eq.n);
  for (size_t e = 0; e < g0_bedges.size(); ++e) {
    int be = g0_bedges[e];
    const auto& b = mesh.bedges[be];
    Vec2 pa = mesh.nodes[b.a], pb = mesh.nodes[b.b];
    double len = (pb - pa).norm();
    Vec2 n = boundary_normal(mesh, be);
    int ftri = mesh.bedge_tri_fluid[be];
    int stri = mesh.bedge_tri_solid[be];
    for (int q = 0; q < eq.n; ++q) {
      EdgeQp& p = g0[e * eq.n + q];
      p.x = pa + (pb - pa) * eq.s[q];
      p.w = eq.w[q] * len;
      p.n = n;
      p.ftri = ftri;
      p.stri = stri;
      p.fref = ref_coords(mesh, ftri, p.x);
      p.sref = ref_coords(mesh, stri, p.x);
    }
  }
}

bool check_compact_support(const VectorField& v, const Mesh& mesh, double tol) {
  const auto& eq = EdgeQuadrature::get();
  auto g = v.grad();
  for (const auto& be : mesh.bedges) {
    if (be.tag == BoundaryTag::Gamma0) continue;
    Vec2 pa = mesh.nodes[be.a], pb = mesh.nodes[be.b];
    for (int q = 0; q < eq.n; ++q) {
      Vec2 x = pa + (pb - pa) * eq.s[q];
      Vec2 val = v.eval(x);
      if (std::fabs(val.x) > tol || std::fabs(val.y) > tol) return false;
      for (const auto& e : g)
        if (std::fabs(e.eval(x.x, x.y)) > tol) return false;
    }
  }
  return true;
}

Kinematics::Kinematics(const Mesh& mesh)
    : mesh_(&mesh),
      qp_(mesh),
      ext_scalar_(mesh, Region::Fluid, ElemKind::ScalarP2),
      ext_vec_(mesh, Region::Fluid, ElemKind::VectorP2) {
  // classify extension dofs and factor the Dirichlet-modified Laplacian once
  int n = ext_scalar_.scalar_dofs();
  bc_.assign(n, {});
  for (size_t v = 0; v < mesh.nodes.size(); ++v) {
    int d = ext_scalar_.vertex_dof(static_cast<int>(v));
    if (d < 0) continue;
    if (mesh.vertex_on(static_cast<int>(v), BoundaryTag::Outer))
      bc_[d] = {BcKind::OnOuter, false, static_cast<int>(v)};
    else if (mesh.vertex_on(static_cast<int>(v), BoundaryTag::Gamma0))
      bc_[d] = {BcKind::OnGamma0, false, static_cast<int>(v)};
  }
  for (size_t e = 0; e < mesh.edges.size(); ++e) {
    int d = ext_scalar_.edge_dof(static_cast<int>(e));
    if (d < 0) continue;
    if (mesh.edge_on(static_cast<int>(e), BoundaryTag::Outer))
      bc_[d] = {BcKind::OnOuter, true, static_cast<int>(e)};
    else if (mesh.edge_on(static_cast<int>(e), BoundaryTag::Gamma0))
      bc_[d] = {BcKind::OnGamma0, true, static_cast<int>(e)};
  }

  const auto& quad = TriQuadrature::get();
  std::vector<Eigen::Triplet<double>> trip;
  ElemBasis basis;
  for (size_t i = 0; i < qp_.fluid_tris.size(); ++i) {
    int tri = qp_.fluid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      eval_basis(ext_scalar_, tri, {quad.xi[q], quad.eta[q]}, basis);
      double w = qp_.fluid_w[i * quad.n + q];
      for (int a = 0; a < basis.n; ++a) {
        if (bc_[basis.dof[a]].kind != BcKind::Free) continue;
        for (int b = 0; b < basis.n; ++b)
          trip.emplace_back(basis.dof[a], basis.dof[b], w * basis.grad[a].dot(basis.grad[b]));
      }
    }
  }
  for (int d = 0; d < n; ++d)
    if (bc_[d].kind != BcKind::Free) trip.emplace_back(d, d, 1.0);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  laplace_.factor(a);
}

DiscreteField Kinematics::lift_trace(const DiscreteField& w) const {
  const FunctionSpace& wsp = *w.space;
  int n = ext_scalar_.scalar_dofs();
  DiscreteField ext(ext_vec_);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int d = 0; d < n; ++d) {
      if (bc_[d].kind != BcKind::OnGamma0) continue;
      int wd = bc_[d].is_edge ? wsp.edge_dof(bc_[d].entity) : wsp.vertex_dof(bc_[d].entity);
      if (wd < 0)
        throw Error(ErrorCode::InvalidMesh, "interface entity not a displacement dof");
      rhs[d] = w.coef[2 * wd + c];
    }
    Eigen::VectorXd x = laplace_.solve(rhs);
    for (int d = 0; d < n; ++d) ext.coef[2 * d + c] = x[d];
  }
  return ext;
}

ShapeVelocity Kinematics::shape_velocity(const VectorField& v) const {
  ShapeVelocity sv;
  sv.field = v;
  const Mesh& mesh = *mesh_;
  sv.node_val.resize(mesh.nodes.size());
  for (size_t i = 0; i < mesh.nodes.size(); ++i) sv.node_val[i] = v.eval(mesh.nodes[i]);

  sv.tri_grad.resize(mesh.tris.size());
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    TriGeom g = tri_geom(mesh, static_cast<int>(t));
    Vec2 rg[3];
    shape_ref_grads(ElemKind::ScalarP1, 0.0, 0.0, rg);
    Mat2 grad;
    for (int k = 0; k < 3; ++k) {
      Vec2 gphys = g.inv_jac_t * rg[k];
      grad += Mat2::outer(sv.node_val[mesh.tris[t].v[k]], gphys);
    }
    sv.tri_grad[t] = grad;
  }

  const auto& quad = TriQuadrature::get();
  auto fill = [&](const std::vector<int>& tris, const std::vector<TriGeom>&,
                  std::vector<Vec2>& vals, std::vector<Mat2>& grads) {
    vals.resize(tris.size() * quad.n);
    grads.resize(tris.size() * quad.n);
    for (size_t i = 0; i < tris.size(); ++i) {
      const auto& tv = mesh.tris[tris[i]].v;
      for (int q = 0; q < quad.n; ++q) {
        double l2 = quad.xi[q], l3 = quad.eta[q], l1 = 1.0 - l2 - l3;
        vals[i * quad.n + q] =
            sv.node_val[tv[0]] * l1 + sv.node_val[tv[1]] * l2 + sv.node_val[tv[2]] * l3;
        grads[i * quad.n + q] = sv.tri_grad[tris[i]];
      }
    }
  };
  fill(qp_.fluid_tris, qp_.fluid_geom, sv.fluid_val, sv.fluid_grad);
  fill(qp_.solid_tris, qp_.solid_geom, sv.solid_val, sv.solid_grad);

  sv.g0_val.resize(qp_.g0.size());
  sv.g0_grad.resize(qp_.g0.size());
  const auto& eq = EdgeQuadrature::get();
  for (size_t e = 0; e < qp_.g0_bedges.size(); ++e) {
    const auto& be = mesh.bedges[qp_.g0_bedges[e]];
    for (int q = 0; q < eq.n; ++q) {
      size_t id = e * eq.n + q;
      double s = eq.s[q];
      sv.g0_val[id] = sv.node_val[be.a] * (1.0 - s) + sv.node_val[be.b] * s;
      sv.g0_grad[id] = sv.tri_grad[qp_.g0[id].ftri];
    }
  }
  return sv;
}

namespace {

TransformSample make_sample(const Mat2& grad_ext, Vec2 disp, Vec2 x) {
  TransformSample s;
  s.A = Mat2::identity() + grad_ext;
  s.J = s.A.det();
  s.G = s.A.cof();
  if (s.J > 0.0) s.F = s.A.inverse() * s.G;
  s.Tx = x + disp;
  return s;
}

} // namespace

TransformState Kinematics::sample_transform(const DiscreteField* w, const DiscreteField* ext,
                                            const VectorField* analytic, const ShapeVelocity* v,
                                            double t, double j_floor) const {
  TransformState ts;
  if (w) ts.w = *w;
  if (ext) ts.ext = *ext;
  ts.t = t;

  const auto& quad = TriQuadrature::get();
  ts.fluid.resize(qp_.fluid_x.size());
  std::array<Expr, 4> agrad;
  if (analytic) agrad = analytic->grad();

  Vec2 worst_x{0, 0};
  auto sample_at = [&](int tri, Vec2 ref, Vec2 x, const Vec2* vel_val, const Mat2* vel_grad) {
    Mat2 grad;
    Vec2 disp{0, 0};
    if (ext) {
      grad = eval_vec_grad(*ext, tri, ref);
      disp = eval_vec(*ext, tri, ref);
    } else if (analytic) {
      grad = Mat2(agrad[0].eval(x.x, x.y), agrad[1].eval(x.x, x.y), agrad[2].eval(x.x, x.y),
                  agrad[3].eval(x.x, x.y));
      disp = analytic->eval(x);
    }
    if (vel_val) {
      grad += *vel_grad * t;
      disp += *vel_val * t;
    }
    TransformSample s = make_sample(grad, disp, x);
    if (s.J < ts.j_min) {
      ts.j_min = s.J;
      worst_x = x;
    }
    return s;
  };

  bool with_v = v && t != 0.0;
  for (size_t i = 0; i < qp_.fluid_tris.size(); ++i) {
    int tri = qp_.fluid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      ts.fluid[id] = sample_at(tri, {quad.xi[q], quad.eta[q]}, qp_.fluid_x[id],
                               with_v ? &v->fluid_val[id] : nullptr,
                               with_v ? &v->fluid_grad[id] : nullptr);
    }
  }
  ts.g0.resize(qp_.g0.size());
  for (size_t id = 0; id < qp_.g0.size(); ++id) {
    const auto& p = qp_.g0[id];
    ts.g0[id] = sample_at(p.ftri, p.fref, p.x, with_v ? &v->g0_val[id] : nullptr,
                          with_v ? &v->g0_grad[id] : nullptr);
  }

  if (!(ts.j_min > j_floor)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "det(grad T) = %.3g at point (%.4g, %.4g), floor %.3g",
                  ts.j_min, worst_x.x, worst_x.y, j_floor);
    throw Error(ErrorCode::NoninvertibleTransform, buf);
  }
  return ts;
}

TransformState Kinematics::build_transform(const DiscreteField& w, double j_floor) const {
  DiscreteField ext = lift_trace(w);
  return sample_transform(&w, &ext, nullptr, nullptr, 0.0, j_floor);
}

TransformState Kinematics::build_transform(const DiscreteField& w, const ShapeVelocity* v,
                                           double t, double j_floor) const {
  DiscreteField ext = lift_trace(w);
  return sample_transform(&w, &ext, nullptr, v, t, j_floor);
}

TransformState Kinematics::build_transform_analytic(const VectorField& e, double j_floor) const {
  return sample_transform(nullptr, nullptr, &e, nullptr, 0.0, j_floor);
}

SolidMap Kinematics::solid_map(const ShapeVelocity* v, double t, double j_floor) const {
  SolidMap map;
  map.qp.resize(qp_.solid_x.size());
  if (!v || t == 0.0) {
    map.identity = true;
    for (size_t id = 0; id < qp_.solid_x.size(); ++id) {
      map.qp[id] = make_sample(Mat2(), {0, 0}, qp_.solid_x[id]);
    }
    return map;
  }
  map.identity = false;
  double jmin = std::numeric_limits<double>::infinity();
  for (size_t id = 0; id < qp_.solid_x.size(); ++id) {
    map.qp[id] = make_sample(v->solid_grad[id] * t, v->solid_val[id] * t, qp_.solid_x[id]);
    jmin = std::min(jmin, map.qp[id].J);
  }
  if (!(jmin > j_floor))
    throw Error(ErrorCode::NoninvertibleTransform,
                "det(grad Phi_t) = " + std::to_string(jmin) + " at or below floor");
  return map;
}

double Kinematics::piola_residual(const TransformState& ts) const {
  // L2-project the four cofactor components onto P1 over the fluid region,
  // then measure the row-wise divergence (constant per element).
  FunctionSpace p1(*mesh_, Region::Fluid, ElemKind::ScalarP1);
  int n = p1.scalar_dofs();
  const auto& quad = TriQuadrature::get();
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 4);
  ElemBasis basis;
  for (size_t i = 0; i < qp_.fluid_tris.size(); ++i) {
    int tri = qp_.fluid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      eval_basis(p1, tri, {quad.xi[q], quad.eta[q]}, basis);
      double w = qp_.fluid_w[id];
      const Mat2& g = ts.fluid[id].G;
      for (int a = 0; a < basis.n; ++a) {
        for (int b = 0; b < basis.n; ++b)
          trip.emplace_back(basis.dof[a], basis.dof[b], w * basis.val[a] * basis.val[b]);
        for (int c = 0; c < 4; ++c) rhs(basis.dof[a], c) += w * basis.val[a] * g.m[c];
      }
    }
  }
  Eigen::SparseMatrix<double> mass(n, n);
  mass.setFromTriplets(trip.begin(), trip.end());
  LuSolver lu;
  lu.factor(mass);
  Eigen::MatrixXd gp1(n, 4);
  for (int c = 0; c < 4; ++c) gp1.col(c) = lu.solve(rhs.col(c));

  double acc = 0.0;
  for (size_t i = 0; i < qp_.fluid_tris.size(); ++i) {
    int tri = qp_.fluid_tris[i];
    eval_basis(p1, tri, {1.0 / 3.0, 1.0 / 3.0}, basis);
    double div[2] = {0.0, 0.0};
    for (int a = 0; a < basis.n; ++a) {
      // component (r, c) of G is column 2r + c
      div[0] += gp1(basis.dof[a], 0) * basis.grad[a].x + gp1(basis.dof[a], 1) * basis.grad[a].y;
      div[1] += gp1(basis.dof[a], 2) * basis.grad[a].x + gp1(basis.dof[a], 3) * basis.grad[a].y;
    }
    acc += qp_.fluid_geom[i].area * (div[0] * div[0] + div[1] * div[1]);
  }
  return std::sqrt(acc);
}

Kinematics::Direction Kinematics::direction_from_displacement(const DiscreteField& k) const {
  DiscreteField lifted = lift_trace(k);
  Direction d;
  const auto& quad = TriQuadrature::get();
  d.val_fluid.resize(qp_.fluid_x.size());
  d.grad_fluid.resize(qp_.fluid_x.size());
  for (size_t i = 0; i < qp_.fluid_tris.size(); ++i) {
    int tri = qp_.fluid_tris[i];
    for (int q = 0; q < quad.n; ++q) {
      size_t id = i * quad.n + q;
      Vec2 ref{quad.xi[q], quad.eta[q]};
      d.val_fluid[id] = eval_vec(lifted, tri, ref);
      d.grad_fluid[id] = eval_vec_grad(lifted, tri, ref);
    }
  }
  d.val_g0.resize(qp_.g0.size());
  d.grad_g0.resize(qp_.g0.size());
  for (size_t id = 0; id < qp_.g0.size(); ++id) {
    const auto& p = qp_.g0[id];
    d.val_g0[id] = eval_vec(lifted, p.ftri, p.fref);
    d.grad_g0[id] = eval_vec_grad(lifted, p.ftri, p.fref);
  }
  return d;
}

Kinematics::Direction Kinematics::direction_from_velocity(const ShapeVelocity& v) {
  Direction d;
  d.val_fluid = v.fluid_val;
  d.grad_fluid = v.fluid_grad;
  d.val_g0 = v.g0_val;
  d.grad_g0 = v.g0_grad;
  return d;
}

Kinematics::TransformDerivatives Kinematics::differentiate(const TransformState& ts,
                                                           const Direction& dir) {
  TransformDerivatives out;
  auto run = [](const std::vector<TransformSample>& samples, const std::vector<Mat2>& grads,
                std::vector<double>& dj, std::vector<Mat2>& dg, std::vector<Mat2>& df) {
    dj.resize(samples.size());
    dg.resize(samples.size());
    df.resize(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
      dj[i] = ddet(samples[i].A, grads[i]);
      dg[i] = dcof(samples[i].A, grads[i]);
      df[i] = dinvcof(samples[i].A, grads[i]);
    }
  };
  run(ts.fluid, dir.grad_fluid, out.dJ_fluid, out.dG_fluid, out.dF_fluid);
  run(ts.g0, dir.grad_g0, out.dJ_g0, out.dG_g0, out.dF_g0);
  return out;
}

std::vector<double> dJ_dw(const Kinematics& kin, const TransformState& ts, const DiscreteField& k) {
  return Kinematics::differentiate(ts, kin.direction_from_displacement(k)).dJ_fluid;
}
std::vector<Mat2> dG_dw(const Kinematics& kin, const TransformState& ts, const DiscreteField& k) {
  return Kinematics::differentiate(ts, kin.direction_from_displacement(k)).dG_fluid;
}
std::vector<Mat2> dF_dw(const Kinematics& kin, const TransformState& ts, const DiscreteField& k) {
  return Kinematics::differentiate(ts, kin.direction_from_displacement(k)).dF_fluid;
}
std::vector<double> dJ_dt(const TransformState& ts, const ShapeVelocity& v) {
  return Kinematics::differentiate(ts, Kinematics::direction_from_velocity(v)).dJ_fluid;
}
std::vector<Mat2> dG_dt(const TransformState& ts, const ShapeVelocity& v) {
  return Kinematics::differentiate(ts, Kinematics::direction_from_velocity(v)).dG_fluid;
}
std::vector<Mat2> dF_dt(const TransformState& ts, const ShapeVelocity& v) {
  return Kinematics::differentiate(ts, Kinematics::direction_from_velocity(v)).dF_fluid;
}

} // namespace fsi
