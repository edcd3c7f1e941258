#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fsishape/error.hpp"
#include "fsishape/expr.hpp"
#include "fsishape/linalg.hpp"

namespace fsi {

enum class Region : uint8_t { Solid = 0, Fluid = 1 };
enum class BoundaryTag : uint8_t { Gamma0 = 0, GammaOmega = 1, Outer = 2 };

// Closed star-shaped interface curve given by a polar radius function.
struct InterfaceCurve {
  enum class Type { Circle, Ellipse, Star };
  Type type = Type::Circle;
  double p0 = 0.5, p1 = 0.0, p2 = 0.0;

  static InterfaceCurve circle(double r);
  static InterfaceCurve ellipse(double a, double b);
  static InterfaceCurve star(double r0, double amplitude, int lobes);
  static InterfaceCurve parse(const std::string& text);

  double radius(double theta) const;
  Vec2 point(double theta) const { double r = radius(theta); return {r * std::cos(theta), r * std::sin(theta)}; }
  double perimeter() const; // sampled
  std::string str() const;
};

struct GeometryConfig {
  double box_half_width = 1.5;
  double support_radius = 0.25;
  InterfaceCurve interface_curve = InterfaceCurve::circle(0.7);
  double target_edge_length = 0.25;
  double min_angle_deg = 20.0;
  // Uniform refinement exponent: grid counts are derived from
  // target_edge_length and then doubled this many times, so convergence
  // studies walk a geometrically refined mesh family.
  int subdivision = 0;

  void validate() const; // NESTING_VIOLATION / INVALID_CONFIG
};

struct Mesh {
  struct Tri {
    int v[3];
    Region region;
  };
  struct BEdge {
    int a, b;
    BoundaryTag tag;
  };

  std::vector<Vec2> nodes;
  std::vector<Tri> tris;
  std::vector<BEdge> bedges;
  std::vector<int> interface_nodes; // sorted node ids on Gamma0

  // topology, built by finalize()
  std::vector<std::pair<int, int>> edges;       // unique undirected edges, a < b
  std::vector<std::array<int, 3>> tri_edges;    // edge ids, local edge k = (v[k], v[(k+1)%3])
  std::vector<std::array<int, 2>> edge_tris;    // adjacent tris (-1 if none)
  std::vector<int> bedge_edge;                  // boundary edge -> edge id
  std::vector<int> bedge_tri_solid;             // adjacent solid tri (-1)
  std::vector<int> bedge_tri_fluid;             // adjacent fluid tri (-1)
  std::vector<uint8_t> vertex_tags;             // bitmask over BoundaryTag
  std::vector<uint8_t> edge_tags;

  void finalize();                       // build topology; throws InvalidMesh on broken topology
  void validate(double min_angle_floor) const;

  int tri_count(Region r) const;
  double tri_area(int t) const;
  double min_angle_deg() const;
  bool vertex_on(int v, BoundaryTag t) const { return vertex_tags[v] & (1u << static_cast<int>(t)); }
  bool edge_on(int e, BoundaryTag t) const { return edge_tags[e] & (1u << static_cast<int>(t)); }
};

Mesh generate_annular_mesh(const GeometryConfig& cfg);
Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh deform_mesh(const Mesh& mesh, const VectorField& phi);

// Unit outward normal of the region the tag convention requires:
// out of SOLID on Gamma0 and GammaOmega, out of FLUID on Outer.
Vec2 boundary_normal(const Mesh& mesh, int bedge_index);

} // namespace fsi
