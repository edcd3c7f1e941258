#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fsishape/solver.hpp"
#include "fsishape/validation.hpp"

using namespace fsi;

namespace {

GeometryConfig demo_geo(double h = 0.25) {
  GeometryConfig cfg;
  cfg.box_half_width = 1.5;
  cfg.support_radius = 0.25;
  cfg.interface_curve = InterfaceCurve::circle(0.7);
  cfg.target_edge_length = h;
  return cfg;
}

// smooth displacement straddling the interface so its trace drives the lift
VectorField solid_bump(double scale) {
  Expr b = Expr::parse("bump(0.7, 0, 0.25)");
  Expr b2 = Expr::parse("bump(0, -0.7, 0.22)");
  return VectorField(scale * b, (-0.7 * scale) * b2);
}

Mat2 random_mat(std::mt19937_64& rng, double spread) {
  Mat2 m;
  for (int i = 0; i < 4; ++i) m.m[i] = uniform(rng, -spread, spread);
  return m;
}

} // namespace

TEST_CASE("lifting is zero for zero data, linear, and respects bounds") {
  Mesh mesh = generate_annular_mesh(demo_geo());
  Kinematics kin(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});

  DiscreteField zero(ww);
  DiscreteField lift0 = kin.lift_trace(zero);
  CHECK(lift0.coef.norm() == 0.0);

  DiscreteField w1 = interpolate(ww, solid_bump(0.05));
  DiscreteField w2 = interpolate(ww, VectorField::parse("0.02*bump(-0.5, 0, 0.15)", "0.03*y*bump(0, 0.5, 0.15)"));
  double a = -1.7;
  DiscreteField combo(ww);
  combo.coef = a * w1.coef + w2.coef;
  DiscreteField left = kin.lift_trace(combo);
  Eigen::VectorXd right = a * kin.lift_trace(w1).coef + kin.lift_trace(w2).coef;
  CHECK((left.coef - right).cwiseAbs().maxCoeff() <= 1e-12);

  // discrete maximum principle, skipped when the fluid mesh has obtuse angles
  bool obtuse = false;
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    if (mesh.tris[t].region != Region::Fluid) continue;
    Vec2 p[3] = {mesh.nodes[mesh.tris[t].v[0]], mesh.nodes[mesh.tris[t].v[1]],
                 mesh.nodes[mesh.tris[t].v[2]]};
    for (int k = 0; k < 3; ++k) {
      Vec2 u = p[(k + 1) % 3] - p[k], v = p[(k + 2) % 3] - p[k];
      if (u.dot(v) < 0) obtuse = true;
    }
  }
  if (!obtuse) {
    DiscreteField lifted = kin.lift_trace(w1);
    double lo = 0.0, hi = 0.0; // boundary data includes the zero outer ring
    const auto& bc = kin.extension_bc();
    for (size_t d = 0; d < bc.size(); ++d) {
      if (bc[d].kind != Kinematics::BcKind::Free) {
        lo = std::min(lo, lifted.coef[2 * d]);
        hi = std::max(hi, lifted.coef[2 * d]);
      }
    }
    for (int d = 0; d < lifted.coef.size() / 2; ++d) {
      CHECK(lifted.coef[2 * d] >= lo - 1e-10);
      CHECK(lifted.coef[2 * d] <= hi + 1e-10);
    }
  }
}

TEST_CASE("transform at zero displacement is the identity") {
  Mesh mesh = generate_annular_mesh(demo_geo(0.3));
  Kinematics kin(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});
  TransformState ts = kin.build_transform(DiscreteField(ww), 0.1);
  for (const auto& s : ts.fluid) {
    CHECK(s.J == 1.0);
    CHECK((s.A - Mat2::identity()).max_abs() == 0.0);
    CHECK((s.G - Mat2::identity()).max_abs() == 0.0);
    CHECK((s.F - Mat2::identity()).max_abs() == 0.0);
  }
}

TEST_CASE("synthetic diagonal gradient gives the expected fields") {
  Mesh mesh = generate_annular_mesh(demo_geo(0.3));
  Kinematics kin(mesh);
  const double alpha = 0.1;
  VectorField e(Expr::parse("0.1*x"), Expr::constant(0.0));
  TransformState ts = kin.build_transform_analytic(e, 0.1);
  for (const auto& s : ts.fluid) {
    CHECK(s.J == doctest::Approx(1.0 + alpha).epsilon(1e-14));
    CHECK(s.G(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.G(1, 1) == doctest::Approx(1.1).epsilon(1e-14));
    CHECK(s.F(0, 0) == doctest::Approx(1.0 / 1.1).epsilon(1e-14));
    CHECK(s.F(1, 1) == doctest::Approx(1.1).epsilon(1e-14));
    CHECK(std::fabs(s.F(0, 1)) < 1e-15);
  }
}

TEST_CASE("transform invariants hold pointwise at a nonzero displacement") {
  Mesh mesh = generate_annular_mesh(demo_geo());
  Kinematics kin(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});
  DiscreteField w = interpolate(ww, solid_bump(0.08));
  TransformState ts = kin.build_transform(w, 0.1);
  CHECK(ts.j_min > 0.1);
  for (const auto& s : ts.fluid) {
    Mat2 jgat = s.A.inverse().transpose() * s.J;
    CHECK((s.G - jgat).max_abs() <= 1e-12);
    CHECK((s.F - s.A.inverse() * s.G).max_abs() <= 1e-12);
    CHECK(std::fabs(s.G.ddot(s.A) - 2.0 * s.J) <= 1e-12);
    CHECK(std::fabs(s.F(0, 1) - s.F(1, 0)) <= 1e-13); // F is symmetric
  }
}

TEST_CASE("oversized displacement trips the invertibility guard") {
  Mesh mesh = generate_annular_mesh(demo_geo());
  Kinematics kin(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});
  double scale = 0.05;
  bool tripped = false;
  for (int i = 0; i < 16 && !tripped; ++i, scale *= 2.0) {
    DiscreteField w = interpolate(ww, solid_bump(scale));
    try {
      TransformState ts = kin.build_transform(w, 0.1);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoninvertibleTransform);
      tripped = true;
    }
  }
  CHECK(tripped);
}

TEST_CASE("displacement derivatives of J, G, F match central differences") {
  Mesh mesh = generate_annular_mesh(demo_geo());
  Kinematics kin(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});
  DiscreteField w = interpolate(ww, solid_bump(0.06));
  DiscreteField k = interpolate(ww, VectorField::parse("0.8*bump(-0.45, 0.1, 0.18)",
                                                       "0.5*bump(0.1, 0.45, 0.18)"));
  TransformState ts = kin.build_transform(w, 0.1);

  auto dJ = dJ_dw(kin, ts, k);
  auto dG = dG_dw(kin, ts, k);
  auto dF = dF_dw(kin, ts, k);

  const double eps = 1e-6;
  DiscreteField wp(ww), wm(ww);
  wp.coef = w.coef + eps * k.coef;
  wm.coef = w.coef - eps * k.coef;
  TransformState tp = kin.build_transform(wp, 0.05);
  TransformState tm = kin.build_transform(wm, 0.05);

  size_t n = ts.fluid.size();
  size_t stride = std::max<size_t>(1, n / 30);
  int checked = 0;
  for (size_t i = 0; i < n; i += stride) {
    double fd_j = (tp.fluid[i].J - tm.fluid[i].J) / (2 * eps);
    CHECK(std::fabs(dJ[i] - fd_j) <= 1e-6 * (1.0 + std::fabs(fd_j)));
    Mat2 fd_g = (tp.fluid[i].G - tm.fluid[i].G) * (1.0 / (2 * eps));
    Mat2 fd_f = (tp.fluid[i].F - tm.fluid[i].F) * (1.0 / (2 * eps));
    CHECK((dG[i] - fd_g).max_abs() <= 1e-6 * (1.0 + fd_g.max_abs()));
    CHECK((dF[i] - fd_f).max_abs() <= 1e-6 * (1.0 + fd_f.max_abs()));
    ++checked;
  }
  CHECK(checked >= 30);

  // linearity in the direction
  DiscreteField k2(ww);
  k2.coef = 2.0 * k.coef;
  auto dF2 = dF_dw(kin, ts, k2);
  for (size_t i = 0; i < n; i += stride)
    CHECK((dF2[i] - 2.0 * dF[i]).max_abs() <= 1e-13 * (1.0 + dF[i].max_abs()));

  // at the identity the J-derivative is the divergence of the lifted field
  TransformState ts0 = kin.build_transform(DiscreteField(ww), 0.1);
  auto dJ0 = dJ_dw(kin, ts0, k);
  DiscreteField lifted = kin.lift_trace(k);
  const auto& qp = kin.qp();
  const auto& quad = TriQuadrature::get();
  for (size_t i = 0; i < qp.fluid_tris.size(); i += 7) {
    size_t id = i * quad.n;
    Mat2 g = eval_vec_grad(lifted, qp.fluid_tris[i], {quad.xi[0], quad.eta[0]});
    CHECK(std::fabs(dJ0[id] - g.trace()) <= 1e-12);
  }
}

TEST_CASE("time derivatives of J, G, F match central differences in t") {
  Mesh mesh = generate_annular_mesh(demo_geo());
  Kinematics kin(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});
  DiscreteField w = interpolate(ww, solid_bump(0.05));
  VectorField vf(Expr::parse("bump(0, 0.7, 0.3)"), Expr::parse("-0.5*bump(0, 0.7, 0.3)"));
  ShapeVelocity sv = kin.shape_velocity(vf);
  TransformState ts = kin.build_transform(w, 0.1);

  auto dJ = dJ_dt(ts, sv);
  auto dG = dG_dt(ts, sv);
  auto dF = dF_dt(ts, sv);

  const double eps = 1e-6;
  TransformState tp = kin.build_transform(w, &sv, eps, 0.05);
  TransformState tm = kin.build_transform(w, &sv, -eps, 0.05);
  size_t n = ts.fluid.size();
  size_t stride = std::max<size_t>(1, n / 30);
  for (size_t i = 0; i < n; i += stride) {
    double fd_j = (tp.fluid[i].J - tm.fluid[i].J) / (2 * eps);
    CHECK(std::fabs(dJ[i] - fd_j) <= 1e-6 * (1.0 + std::fabs(fd_j)));
    Mat2 fd_g = (tp.fluid[i].G - tm.fluid[i].G) * (1.0 / (2 * eps));
    Mat2 fd_f = (tp.fluid[i].F - tm.fluid[i].F) * (1.0 / (2 * eps));
    CHECK((dG[i] - fd_g).max_abs() <= 1e-6 * (1.0 + fd_g.max_abs()));
    CHECK((dF[i] - fd_f).max_abs() <= 1e-6 * (1.0 + fd_f.max_abs()));
  }

  // at the identity: dJ/dt = div V and dF/dt = tr(gradV) I - 2 sym(gradV)
  TransformState ts0 = kin.build_transform(DiscreteField(ww), 0.1);
  auto dJ0 = dJ_dt(ts0, sv);
  auto dF0 = dF_dt(ts0, sv);
  for (size_t i = 0; i < n; i += stride) {
    const Mat2& gv = sv.fluid_grad[i];
    CHECK(std::fabs(dJ0[i] - gv.trace()) <= 1e-14 * (1.0 + std::fabs(gv.trace())));
    Mat2 want = Mat2::identity() * gv.trace() - 2.0 * gv.sym();
    CHECK((dF0[i] - want).max_abs() <= 1e-14 * (1.0 + want.max_abs()));
  }
}

TEST_CASE("matrix calculus base rules match finite differences on random matrices") {
  std::mt19937_64 rng(2024);
  int count = 0;
  while (count < 100) {
    Mat2 a = Mat2::identity() + random_mat(rng, 0.45);
    if (std::fabs(a.det()) < 0.2) continue;
    ++count;
    Mat2 b = random_mat(rng, 1.0);
    const double eps = 1e-6;
    Mat2 ap = a + b * eps, am = a - b * eps;

    double fd_det = (ap.det() - am.det()) / (2 * eps);
    CHECK(std::fabs(ddet(a, b) - fd_det) <= 1e-6 * (1.0 + std::fabs(fd_det)));

    Mat2 fd_cof = (ap.cof() - am.cof()) * (1.0 / (2 * eps));
    CHECK((dcof(a, b) - fd_cof).max_abs() <= 1e-6 * (1.0 + fd_cof.max_abs()));

    Mat2 fd_inv = (ap.inverse() - am.inverse()) * (1.0 / (2 * eps));
    Mat2 dinv = (a.inverse() * b * a.inverse()) * -1.0;
    CHECK((dinv - fd_inv).max_abs() <= 1e-6 * (1.0 + fd_inv.max_abs()));

    Mat2 fd_icof = (ap.inverse() * ap.cof() - am.inverse() * am.cof()) * (1.0 / (2 * eps));
    CHECK((dinvcof(a, b) - fd_icof).max_abs() <= 1e-6 * (1.0 + fd_icof.max_abs()));
  }
}

TEST_CASE("derivative structural identity couples dG and dJ") {
  Mesh mesh = generate_annular_mesh(demo_geo());
  Kinematics kin(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});
  DiscreteField w = interpolate(ww, solid_bump(0.06));
  DiscreteField k = interpolate(ww, VectorField::parse("bump(0.45, -0.1, 0.18)", "0"));
  TransformState ts = kin.build_transform(w, 0.1);
  auto dir = kin.direction_from_displacement(k);
  auto der = Kinematics::differentiate(ts, dir);
  for (size_t i = 0; i < ts.fluid.size(); i += 5) {
    // differentiate G : A = 2 J
    double lhs = der.dG_fluid[i].ddot(ts.fluid[i].A) + ts.fluid[i].G.ddot(dir.grad_fluid[i]);
    CHECK(std::fabs(lhs - 2.0 * der.dJ_fluid[i]) <= 1e-11);
  }
}

TEST_CASE("cofactor field divergence vanishes for constant-gradient maps") {
  Mesh mesh = generate_annular_mesh(demo_geo(0.3));
  Kinematics kin(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});

  TransformState ts0 = kin.build_transform(DiscreteField(ww), 0.1);
  CHECK(kin.piola_residual(ts0) <= 1e-12);

  VectorField affine(Expr::parse("0.08*x + 0.03*y"), Expr::parse("-0.02*x + 0.05*y"));
  TransformState tsa = kin.build_transform_analytic(affine, 0.1);
  CHECK(kin.piola_residual(tsa) <= 1e-12);
}

TEST_CASE("compact support checks at the outer boundaries") {
  Mesh mesh = generate_annular_mesh(demo_geo(0.3));
  VectorField inside(Expr::parse("bump(0, 1.0, 0.3)"), Expr::parse("bump(0, 1.0, 0.3)"));
  CHECK(check_compact_support(inside, mesh, 1e-12));
  VectorField constant(Expr::constant(1.0), Expr::constant(0.0));
  CHECK(!check_compact_support(constant, mesh, 1e-12));
  VectorField straddling(Expr::parse("bump(1.5, 0, 0.4)"), Expr::constant(0.0));
  CHECK(!check_compact_support(straddling, mesh, 1e-12));
  VectorField at_support(Expr::parse("bump(0.25, 0, 0.2)"), Expr::constant(0.0));
  CHECK(!check_compact_support(at_support, mesh, 1e-12));
}
