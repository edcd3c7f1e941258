#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <numbers>

#include "fsishape/assembly.hpp"
#include "fsishape/solver.hpp"

using namespace fsi;

namespace {

Mesh single_triangle(Vec2 a, Vec2 b, Vec2 c) {
  Mesh m;
  m.nodes = {a, b, c};
  m.tris = {{{0, 1, 2}, Region::Fluid}};
  m.bedges = {{0, 1, BoundaryTag::Outer}, {1, 2, BoundaryTag::Outer}, {2, 0, BoundaryTag::Outer}};
  m.finalize();
  return m;
}

Mesh unit_square() {
  Mesh m;
  m.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.tris = {{{0, 1, 2}, Region::Fluid}, {{0, 2, 3}, Region::Fluid}};
  m.bedges = {{0, 1, BoundaryTag::Outer},
              {1, 2, BoundaryTag::Outer},
              {2, 3, BoundaryTag::Outer},
              {3, 0, BoundaryTag::Outer}};
  m.finalize();
  return m;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

} // namespace

TEST_CASE("triangle rule is exact to degree 6 on the reference element") {
  const auto& q = TriQuadrature::get();
  for (int p = 0; p <= 6; ++p) {
    for (int r = 0; p + r <= 6; ++r) {
      double got = 0;
      for (int i = 0; i < q.n; ++i)
        got += q.w[i] * std::pow(q.xi[i], p) * std::pow(q.eta[i], r);
      got *= 0.5; // reference area
      double want = factorial(p) * factorial(r) / factorial(p + r + 2);
      CHECK(got == doctest::Approx(want).epsilon(1e-13));
    }
  }
}

TEST_CASE("edge rule is exact to degree 7") {
  const auto& q = EdgeQuadrature::get();
  for (int p = 0; p <= 7; ++p) {
    double got = 0;
    for (int i = 0; i < q.n; ++i) got += q.w[i] * std::pow(q.s[i], p);
    CHECK(got == doctest::Approx(1.0 / (p + 1)).epsilon(1e-14));
  }
}

TEST_CASE("P1 stiffness on the unit right triangle") {
  Mesh m = single_triangle({0, 0}, {1, 0}, {0, 1});
  QpTables qp(m);
  FunctionSpace p1(m, Region::Fluid, ElemKind::ScalarP1);
  SparseSystem sys(3);
  assemble_volume_form(qp, p1, p1, sys, 0, 0,
                       [](int, Vec2, const TrialFn& u, const TrialFn& v) {
                         return u.grad.dot(v.grad);
                       });
  Eigen::MatrixXd a = Eigen::MatrixXd(sys.matrix());
  Eigen::MatrixXd want(3, 3);
  want << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  want *= 0.5;
  CHECK((a - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("P1 mass matrix on an arbitrary triangle") {
  Mesh m = single_triangle({0.2, -0.1}, {1.4, 0.3}, {0.5, 1.1});
  double area = m.tri_area(0);
  QpTables qp(m);
  FunctionSpace p1(m, Region::Fluid, ElemKind::ScalarP1);
  SparseSystem sys(3);
  assemble_volume_form(qp, p1, p1, sys, 0, 0,
                       [](int, Vec2, const TrialFn& u, const TrialFn& v) {
                         return u.val * v.val;
                       });
  Eigen::MatrixXd a = Eigen::MatrixXd(sys.matrix());
  Eigen::MatrixXd want(3, 3);
  want << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  want *= area / 12.0;
  CHECK((a - want).cwiseAbs().maxCoeff() < 1e-14 * area);
}

TEST_CASE("identity coefficient recovers the plain viscous block") {
  GeometryConfig cfg;
  cfg.interface_curve = InterfaceCurve::circle(0.6);
  cfg.target_edge_length = 0.3;
  Mesh mesh = generate_annular_mesh(cfg);
  QpTables qp(mesh);
  FunctionSpace vv(mesh, Region::Fluid, ElemKind::VectorP2,
                   {BoundaryTag::Outer, BoundaryTag::Gamma0});
  int n = vv.dofs();
  SparseSystem with_coef(n), plain(n);
  Mat2 eye = Mat2::identity();
  assemble_volume_form(qp, vv, vv, with_coef, 0, 0,
                       [&](int, Vec2, const TrialFn& u, const TrialFn& v) {
                         if (u.comp != v.comp) return 0.0;
                         return (eye.transpose() * u.grad).dot(v.grad);
                       });
  assemble_volume_form(qp, vv, vv, plain, 0, 0,
                       [](int, Vec2, const TrialFn& u, const TrialFn& v) {
                         if (u.comp != v.comp) return 0.0;
                         return u.grad.dot(v.grad);
                       });
  Eigen::MatrixXd diff = Eigen::MatrixXd(with_coef.matrix()) - Eigen::MatrixXd(plain.matrix());
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("symmetric kernels assemble to symmetric matrices") {
  GeometryConfig cfg;
  cfg.target_edge_length = 0.25;
  Mesh mesh = generate_annular_mesh(cfg);
  QpTables qp(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});
  SparseSystem sys(ww.dofs());
  assemble_volume_form(qp, ww, ww, sys, 0, 0,
                       [](int, Vec2, const TrialFn& u, const TrialFn& v) {
                         if (u.comp != v.comp) return 0.0;
                         return u.grad.dot(v.grad) + u.val * v.val;
                       });
  Eigen::SparseMatrix<double> a = sys.matrix();
  Eigen::SparseMatrix<double> d = Eigen::SparseMatrix<double>(a.transpose()) - a;
  double asym = 0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it)
      asym = std::max(asym, std::fabs(it.value()));
  CHECK(asym <= 1e-13);
}

TEST_CASE("direct solve: identity, diagonal, and a dense-LU oracle") {
  {
    SparseSystem sys(3);
    for (int i = 0; i < 3; ++i) sys.add(i, i, 1.0);
    sys.rhs() << 3.0, -1.0, 7.5;
    Eigen::VectorXd x = sys.solve();
    CHECK(x[0] == doctest::Approx(3.0));
    CHECK(x[1] == doctest::Approx(-1.0));
    CHECK(x[2] == doctest::Approx(7.5));
  }
  {
    SparseSystem sys(2);
    sys.add(0, 0, 2.0);
    sys.add(1, 1, 4.0);
    sys.rhs() << 2.0, 8.0;
    Eigen::VectorXd x = sys.solve();
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));
  }
  {
    // Poisson with a P2 space on a small annulus vs dense solve
    GeometryConfig cfg;
    cfg.target_edge_length = 0.4;
    Mesh mesh = generate_annular_mesh(cfg);
    QpTables qp(mesh);
    FunctionSpace sp(mesh, Region::Fluid, ElemKind::ScalarP2,
                     {BoundaryTag::Outer, BoundaryTag::Gamma0});
    SparseSystem sys(sp.scalar_dofs());
    assemble_volume_form(qp, sp, sp, sys, 0, 0,
                         [](int, Vec2, const TrialFn& u, const TrialFn& v) {
                           return u.grad.dot(v.grad);
                         });
    assemble_rhs_volume(qp, sp, sys.rhs(), 0, [](int, Vec2 x, const TrialFn& v) {
      return std::sin(x.x) * v.val;
    });
    Eigen::VectorXd x = sys.solve();
    Eigen::MatrixXd dense = Eigen::MatrixXd(sys.matrix());
    Eigen::VectorXd xd = dense.fullPivLu().solve(sys.rhs());
    CHECK((x - xd).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("solving a singular system reports the failure") {
  SparseSystem sys(2);
  sys.add(0, 0, 1.0);
  sys.add(0, 1, 1.0);
  sys.add(1, 0, 1.0);
  sys.add(1, 1, 1.0);
  sys.rhs() << 1.0, 0.0;
  CHECK_THROWS_WITH_AS(static_cast<void>(sys.solve()), doctest::Contains("SINGULAR_SYSTEM"),
                       Error);
}

TEST_CASE("norms of interpolants match hand integrals") {
  Mesh mesh = unit_square();
  FunctionSpace sp(mesh, Region::Fluid, ElemKind::ScalarP2);
  DiscreteField zero(sp);
  CHECK(compute_norm(zero, NormKind::L2) == 0.0);
  CHECK(compute_norm(zero, NormKind::H1Semi) == 0.0);

  DiscreteField fx = interpolate(sp, Expr::parse("x"));
  CHECK(compute_norm(fx, NormKind::L2) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-13));
  CHECK(compute_norm(fx, NormKind::H1Semi) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("interface forms: zero traction, perimeter, and closed-loop normals") {
  GeometryConfig cfg;
  cfg.interface_curve = InterfaceCurve::circle(0.5);
  cfg.support_radius = 0.2;
  cfg.target_edge_length = 0.2;
  Mesh mesh = generate_annular_mesh(cfg);
  QpTables qp(mesh);
  FunctionSpace ww(mesh, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega});

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ww.dofs());
  assemble_interface_form(qp, ww, InterfaceSide::Solid, rhs, 0,
                          [](int, Vec2, Vec2, const TrialFn&) { return 0.0; });
  CHECK(rhs.norm() == 0.0);

  // constant traction (1,0) against the extension of (1,0): the perimeter
  rhs.setZero();
  assemble_interface_form(qp, ww, InterfaceSide::Solid, rhs, 0,
                          [](int, Vec2, Vec2, const TrialFn& v) {
                            return v.comp == 0 ? v.val : 0.0;
                          });
  DiscreteField ones = interpolate(ww, VectorField::parse("1", "0"));
  double integral = rhs.dot(ones.coef);
  CHECK(integral == doctest::Approx(2 * std::numbers::pi * 0.5).epsilon(0.01));

  // traction n against constants: closed-polygon integral of the normal is 0
  rhs.setZero();
  assemble_interface_form(qp, ww, InterfaceSide::Solid, rhs, 0,
                          [](int, Vec2, Vec2 n, const TrialFn& v) {
                            return n[v.comp] * v.val;
                          });
  DiscreteField c1 = interpolate(ww, VectorField::parse("1", "0"));
  DiscreteField c2 = interpolate(ww, VectorField::parse("0", "1"));
  CHECK(std::fabs(rhs.dot(c1.coef)) <= 1e-3);
  CHECK(std::fabs(rhs.dot(c2.coef)) <= 1e-3);
}

TEST_CASE("volume assembly rejects mismatched regions") {
  GeometryConfig cfg;
  cfg.target_edge_length = 0.4;
  Mesh mesh = generate_annular_mesh(cfg);
  QpTables qp(mesh);
  FunctionSpace vf(mesh, Region::Fluid, ElemKind::VectorP2);
  FunctionSpace ws(mesh, Region::Solid, ElemKind::VectorP2);
  SparseSystem sys(vf.dofs() + ws.dofs());
  CHECK_THROWS_AS(assemble_volume_form(qp, vf, ws, sys, 0, 0,
                                       [](int, Vec2, const TrialFn&, const TrialFn&) {
                                         return 1.0;
                                       }),
                  Error);
}
