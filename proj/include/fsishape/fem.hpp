#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fsishape/mesh.hpp"

namespace fsi {

// Symmetric degree-6 triangle rule (12 points) and 4-point Gauss edge rule.
// Triangle weights are normalized to sum to 1 (multiply by element area).
struct TriQuadrature {
  static constexpr int n = 12;
  double xi[n];
  double eta[n];
  double w[n];
  static const TriQuadrature& get();
};

struct EdgeQuadrature {
  static constexpr int n = 4;
  double s[n]; // on [0, 1]
  double w[n]; // sum to 1 (multiply by edge length)
  static const EdgeQuadrature& get();
};

enum class ElemKind { VectorP2, ScalarP2, ScalarP1 };

inline int components_of(ElemKind k) { return k == ElemKind::VectorP2 ? 2 : 1; }
inline int local_basis_of(ElemKind k) { return k == ElemKind::ScalarP1 ? 3 : 6; }

// Scalar P1/P2 Lagrange basis on the reference triangle.
void shape_values(ElemKind kind, double xi, double eta, double* out);   // nloc values
void shape_ref_grads(ElemKind kind, double xi, double eta, Vec2* out);  // nloc gradients

// Dof space over one mesh region. Scalar dofs live on vertices (P1/P2) and
// edges (P2) of region triangles; entities on a Dirichlet-tagged boundary are
// excluded from the dof set (their value is 0 for constrained spaces).
class FunctionSpace {
public:
  FunctionSpace(const Mesh& mesh, Region region, ElemKind kind,
                std::vector<BoundaryTag> dirichlet = {});

  const Mesh& mesh() const { return *mesh_; }
  Region region() const { return region_; }
  ElemKind kind() const { return kind_; }
  int components() const { return components_of(kind_); }
  int scalar_dofs() const { return n_scalar_; }
  int dofs() const { return n_scalar_ * components(); }

  int vertex_dof(int v) const { return vertex_dof_[v]; }   // -1 if constrained / inactive
  int edge_dof(int e) const { return kind_ == ElemKind::ScalarP1 ? -1 : edge_dof_[e]; }

  // Scalar dof ids of the local basis functions on a region triangle.
  // P1: 3 vertices; P2: 3 vertices then 3 edges (local edge k = (vk, vk+1)).
  void local_dofs(int tri, int* out) const;

  const std::vector<int>& region_tris() const { return region_tris_; }
  bool in_region(int tri) const { return mesh_->tris[tri].region == region_; }

  // Coordinates of the entity carrying each scalar dof (vertex or edge midpoint).
  std::vector<Vec2> dof_points() const;

private:
  const Mesh* mesh_;
  Region region_;
  ElemKind kind_;
  int n_scalar_ = 0;
  std::vector<int> vertex_dof_;
  std::vector<int> edge_dof_;
  std::vector<int> region_tris_;
};

struct DiscreteField {
  const FunctionSpace* space = nullptr;
  Eigen::VectorXd coef;

  DiscreteField() = default;
  explicit DiscreteField(const FunctionSpace& sp)
      : space(&sp), coef(Eigen::VectorXd::Zero(sp.dofs())) {}

  int dofs() const { return space ? space->dofs() : 0; }
};

// Geometry of one affine triangle.
struct TriGeom {
  Vec2 p0;
  Mat2 jac;      // columns (p1-p0, p2-p0)
  Mat2 inv_jac_t;
  double area;
};
TriGeom tri_geom(const Mesh& mesh, int tri);

// Reference coordinates of physical point p inside triangle tri (affine inverse).
Vec2 ref_coords(const Mesh& mesh, int tri, Vec2 p);

// Basis data of a space on one triangle at one reference point.
struct ElemBasis {
  int n = 0;
  int dof[6];        // scalar dof ids, -1 = constrained
  double val[6];
  Vec2 grad[6];      // physical gradients
};
void eval_basis(const FunctionSpace& sp, int tri, Vec2 ref, ElemBasis& out);

// Field evaluation at a reference point of a triangle in the field's region.
Vec2 eval_vec(const DiscreteField& f, int tri, Vec2 ref);
Mat2 eval_vec_grad(const DiscreteField& f, int tri, Vec2 ref); // rows = components
double eval_scalar(const DiscreteField& f, int tri, Vec2 ref);
Vec2 eval_scalar_grad(const DiscreteField& f, int tri, Vec2 ref);

// Nodal interpolation of analytic fields (vertex + edge-midpoint values).
DiscreteField interpolate(const FunctionSpace& sp, const VectorField& v);
DiscreteField interpolate(const FunctionSpace& sp, const Expr& e);

enum class NormKind { L2, H1Semi };
double compute_norm(const DiscreteField& f, NormKind kind);
inline double h1_norm(const DiscreteField& f) {
  double a = compute_norm(f, NormKind::L2), b = compute_norm(f, NormKind::H1Semi);
  return std::sqrt(a * a + b * b);
}

} // namespace fsi
