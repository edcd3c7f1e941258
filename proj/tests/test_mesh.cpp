#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "fsishape/mesh.hpp"

using namespace fsi;

namespace {

GeometryConfig demo_config(double h = 0.4) {
  GeometryConfig cfg;
  cfg.box_half_width = 1.5;
  cfg.support_radius = 0.2;
  cfg.interface_curve = InterfaceCurve::circle(0.5);
  cfg.target_edge_length = h;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("generated mesh carries both regions and a closed interface loop") {
  Mesh mesh = generate_annular_mesh(demo_config());
  CHECK(mesh.tri_count(Region::Solid) > 0);
  CHECK(mesh.tri_count(Region::Fluid) > 0);

  // gamma0 edges form a closed loop: every interface node has exactly two
  std::map<int, int> degree;
  int n_gamma0 = 0;
  for (const auto& be : mesh.bedges) {
    if (be.tag != BoundaryTag::Gamma0) continue;
    ++n_gamma0;
    degree[be.a]++;
    degree[be.b]++;
  }
  CHECK(n_gamma0 > 0);
  for (const auto& [node, deg] : degree) CHECK(deg == 2);
  CHECK(degree.size() == mesh.interface_nodes.size());
}

TEST_CASE("halving the edge length roughly quadruples the triangle count") {
  Mesh coarse = generate_annular_mesh(demo_config(0.2));
  Mesh fine = generate_annular_mesh(demo_config(0.1));
  double ratio = static_cast<double>(fine.tris.size()) / coarse.tris.size();
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("nesting violations are rejected") {
  GeometryConfig cfg = demo_config();
  cfg.interface_curve = InterfaceCurve::circle(1.6);
  CHECK_THROWS_WITH_AS(static_cast<void>(generate_annular_mesh(cfg)),
                       doctest::Contains("NESTING_VIOLATION"), Error);
  cfg = demo_config();
  cfg.interface_curve = InterfaceCurve::circle(0.15); // inside the support disk
  CHECK_THROWS_AS(static_cast<void>(generate_annular_mesh(cfg)), Error);
}

TEST_CASE("boundary nodes sit on the prescribed curves") {
  GeometryConfig cfg = demo_config(0.3);
  cfg.interface_curve = InterfaceCurve::star(0.55, 0.15, 5);
  Mesh mesh = generate_annular_mesh(cfg);
  double tol = cfg.target_edge_length / 100.0;
  for (const auto& be : mesh.bedges) {
    for (int v : {be.a, be.b}) {
      Vec2 p = mesh.nodes[v];
      double theta = std::atan2(p.y, p.x);
      switch (be.tag) {
        case BoundaryTag::GammaOmega:
          CHECK(std::fabs(p.norm() - cfg.support_radius) < tol);
          break;
        case BoundaryTag::Gamma0:
          CHECK(std::fabs(p.norm() - cfg.interface_curve.radius(theta)) < tol);
          break;
        case BoundaryTag::Outer:
          CHECK(std::max(std::fabs(p.x), std::fabs(p.y)) ==
                doctest::Approx(cfg.box_half_width).epsilon(1e-12));
          break;
      }
    }
  }
}

TEST_CASE("region areas add up to the box area within 2 percent") {
  for (auto curve : {InterfaceCurve::circle(0.5), InterfaceCurve::ellipse(0.6, 0.45)}) {
    GeometryConfig cfg = demo_config(0.25);
    cfg.interface_curve = curve;
    Mesh mesh = generate_annular_mesh(cfg);
    double area = 0;
    for (size_t t = 0; t < mesh.tris.size(); ++t) area += mesh.tri_area(static_cast<int>(t));
    double omega = std::numbers::pi * cfg.support_radius * cfg.support_radius;
    double box = 4.0 * cfg.box_half_width * cfg.box_half_width;
    CHECK(std::fabs(area + omega - box) <= 0.02 * box);
  }
}

TEST_CASE("interface edge sets from the two sides coincide") {
  Mesh mesh = generate_annular_mesh(demo_config(0.3));
  std::set<std::pair<int, int>> from_solid, from_fluid;
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      int e = mesh.tri_edges[t][k];
      if (!mesh.edge_on(e, BoundaryTag::Gamma0)) continue;
      auto key = mesh.edges[e];
      (mesh.tris[t].region == Region::Solid ? from_solid : from_fluid).insert(key);
    }
  }
  CHECK(from_solid == from_fluid);
  CHECK(!from_solid.empty());
}

TEST_CASE("deform by zero is exact and support conditions pin outer nodes") {
  Mesh mesh = generate_annular_mesh(demo_config(0.3));
  Mesh same = deform_mesh(mesh, VectorField::zero());
  for (size_t i = 0; i < mesh.nodes.size(); ++i) {
    CHECK(mesh.nodes[i].x == same.nodes[i].x);
    CHECK(mesh.nodes[i].y == same.nodes[i].y);
  }

  VectorField v = VectorField::parse("0.05*bump(0.5, 0, 0.2)", "0.05*bump(0.5, 0, 0.2)");
  Mesh moved = deform_mesh(mesh, v);
  for (const auto& be : moved.bedges) {
    if (be.tag == BoundaryTag::Gamma0) continue;
    for (int n : {be.a, be.b}) {
      CHECK(moved.nodes[n].x == mesh.nodes[n].x);
      CHECK(moved.nodes[n].y == mesh.nodes[n].y);
    }
  }
}

TEST_CASE("flipping a triangle is reported as tangling") {
  Mesh mesh = generate_annular_mesh(demo_config(0.4));
  // push one interior fluid vertex far across the domain
  int target = -1;
  for (size_t v = 0; v < mesh.nodes.size(); ++v) {
    if (mesh.vertex_tags[v] == 0 && mesh.nodes[v].norm() > 0.8) {
      target = static_cast<int>(v);
      break;
    }
  }
  REQUIRE(target >= 0);
  Vec2 p = mesh.nodes[target];
  char buf[160];
  std::snprintf(buf, sizeof buf, "bump(%.17g, %.17g, 0.12)", p.x, p.y);
  // bump equals exp(-1) at its center; scale to shove the vertex by ~1
  double s = -3.0 * std::exp(1.0) * p.x / p.norm();
  VectorField v(Expr::constant(s) * Expr::parse(buf), Expr::constant(0.0));
  CHECK_THROWS_WITH_AS(static_cast<void>(deform_mesh(mesh, v)), doctest::Contains("TANGLED_MESH"),
                       Error);
}

TEST_CASE("boundary normals are unit and outward") {
  Mesh mesh = generate_annular_mesh(demo_config(0.25));
  for (size_t i = 0; i < mesh.bedges.size(); ++i) {
    Vec2 n = boundary_normal(mesh, static_cast<int>(i));
    CHECK(std::fabs(n.norm() - 1.0) < 1e-14);
    const auto& be = mesh.bedges[i];
    Vec2 mid = (mesh.nodes[be.a] + mesh.nodes[be.b]) * 0.5;
    switch (be.tag) {
      case BoundaryTag::Gamma0:
        // out of the solid: radially outward for the circle
        CHECK(n.dot(mid) > 0.9 * mid.norm());
        break;
      case BoundaryTag::GammaOmega:
        CHECK(n.dot(mid) < -0.9 * mid.norm()); // toward the support disk
        break;
      case BoundaryTag::Outer: {
        CHECK(n.dot(mid) > 0.0);
        double c = std::max(std::fabs(n.x), std::fabs(n.y));
        CHECK(c == doctest::Approx(1.0)); // axis-aligned box sides
        break;
      }
    }
  }
}

TEST_CASE("mesh files round-trip and validation catches broken input") {
  Mesh mesh = generate_annular_mesh(demo_config(0.35));
  std::string path = temp_path("fsishape_mesh_roundtrip.txt");
  save_mesh(mesh, path);
  Mesh loaded = load_mesh(path);
  CHECK(loaded.nodes.size() == mesh.nodes.size());
  CHECK(loaded.tris.size() == mesh.tris.size());
  CHECK(loaded.bedges.size() == mesh.bedges.size());
  for (size_t i = 0; i < mesh.nodes.size(); ++i) {
    CHECK(loaded.nodes[i].x == mesh.nodes[i].x);
    CHECK(loaded.nodes[i].y == mesh.nodes[i].y);
  }

  // a well-formed toy: two fluid right triangles in a unit square
  std::string toy = temp_path("fsishape_mesh_toy.txt");
  {
    std::ofstream f(toy);
    f << "fsimesh 1\nnodes 4\n0 0\n1 0\n1 1\n0 1\n";
    f << "triangles 2\n0 1 2 fluid\n0 2 3 fluid\n";
    f << "bedges 4\n0 1 outer\n1 2 outer\n2 3 outer\n3 0 outer\n";
  }
  Mesh t = load_mesh(toy);
  CHECK(t.tris.size() == 2);

  // negative orientation
  {
    std::ofstream f(toy);
    f << "fsimesh 1\nnodes 4\n0 0\n1 0\n1 1\n0 1\n";
    f << "triangles 2\n0 2 1 fluid\n0 2 3 fluid\n";
    f << "bedges 4\n0 1 outer\n1 2 outer\n2 3 outer\n3 0 outer\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(load_mesh(toy)), doctest::Contains("orientation"), Error);

  // truncated file
  {
    std::ofstream f(toy);
    f << "fsimesh 1\nnodes 4\n0 0\n1 0\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(load_mesh(toy)), doctest::Contains("PARSE_ERROR"), Error);

  // boundary edge tag inconsistent with the adjacent region
  {
    std::ofstream f(toy);
    f << "fsimesh 1\nnodes 4\n0 0\n1 0\n1 1\n0 1\n";
    f << "triangles 2\n0 1 2 fluid\n0 2 3 fluid\n";
    f << "bedges 4\n0 1 gammaomega\n1 2 outer\n2 3 outer\n3 0 outer\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(load_mesh(toy)), doctest::Contains("INVALID_MESH"), Error);
}

TEST_CASE("quality floor failures are reported as such") {
  GeometryConfig cfg = demo_config(0.4);
  cfg.min_angle_deg = 65.0; // unreachable for this generator
  CHECK_THROWS_WITH_AS(static_cast<void>(generate_annular_mesh(cfg)),
                       doctest::Contains("QUALITY_FAILURE"), Error);
}
