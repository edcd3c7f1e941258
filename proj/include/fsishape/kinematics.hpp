#pragma once

#include <limits>
#include <memory>

#include "fsishape/fem.hpp"
#include "fsishape/sparse.hpp"

namespace fsi {

// Quadrature-point tables over the two regions and the interface, shared by
// assembly, sampling and functional evaluation. Fluid/solid triangles are
// indexed densely in mesh order; a volume sample id is tri_pos * 12 + q and an
// interface sample id is edge_pos * 4 + q.
struct QpTables {
  const Mesh* mesh = nullptr;

  std::vector<int> fluid_tris, solid_tris;
  std::vector<TriGeom> fluid_geom, solid_geom;
  std::vector<Vec2> fluid_x, solid_x;
  std::vector<double> fluid_w, solid_w;

  struct EdgeQp {
    Vec2 x;
    double w;    // arc-length weight
    Vec2 n;      // unit normal, out of the solid
    int ftri, stri;
    Vec2 fref, sref;
  };
  std::vector<int> g0_bedges;
  std::vector<EdgeQp> g0;

  explicit QpTables(const Mesh& mesh);

  int fluid_pos(int tri) const { return fluid_pos_[tri]; }
  int solid_pos(int tri) const { return solid_pos_[tri]; }

private:
  std::vector<int> fluid_pos_, solid_pos_;
};

// Pointwise samples of the displacement-to-deformation map T = id + extension:
// A = grad T, J = det A, G = cof A, F = A^{-1} cof A, Tx = T(x).
struct TransformSample {
  Mat2 A, G, F;
  double J = 1.0;
  Vec2 Tx;
};

struct TransformState {
  DiscreteField w;    // generating displacement (may be empty for analytic builds)
  DiscreteField ext;  // lifted extension on the fluid region
  double t = 0.0;     // domain-perturbation parameter baked into the samples
  std::vector<TransformSample> fluid; // fluid volume samples
  std::vector<TransformSample> g0;    // interface samples, fluid side
  double j_min = std::numeric_limits<double>::infinity();
};

// Samples of the domain perturbation map Phi_t = id + t V on the solid region.
struct SolidMap {
  bool identity = true;
  std::vector<TransformSample> qp; // solid volume samples
};

// Shape velocity direction: an analytic field with compact support in the
// deformable band, entering all discrete operators through its piecewise
// linear vertex interpolant (values and per-element gradients).
struct ShapeVelocity {
  VectorField field;
  std::vector<Vec2> node_val;
  std::vector<Mat2> tri_grad;
  std::vector<Vec2> fluid_val, solid_val, g0_val;
  std::vector<Mat2> fluid_grad, solid_grad, g0_grad; // g0 side: fluid element
};

bool check_compact_support(const VectorField& v, const Mesh& mesh, double tol);

class Kinematics {
public:
  explicit Kinematics(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  const QpTables& qp() const { return qp_; }
  const FunctionSpace& ext_space() const { return ext_vec_; }

  // Componentwise discrete harmonic extension: trace of w on Gamma0, zero on
  // the outer boundary. Linear in w.
  DiscreteField lift_trace(const DiscreteField& w) const;

  ShapeVelocity shape_velocity(const VectorField& v) const;

  TransformState build_transform(const DiscreteField& w, double j_floor) const;
  TransformState build_transform(const DiscreteField& w, const ShapeVelocity* v, double t,
                                 double j_floor) const;
  // Transform sampled from an analytic extension (test/verification hook).
  TransformState build_transform_analytic(const VectorField& e, double j_floor) const;

  SolidMap solid_map(const ShapeVelocity* v, double t, double j_floor) const;

  // L2 norm over the fluid region of the row-wise divergence of cof(grad T),
  // computed from the P1 projection of the cofactor samples.
  double piola_residual(const TransformState& ts) const;

  // Direction samples for differentiating (J, G, F): the direction enters as
  // a fluid vector field (lifted displacement increment or shape velocity).
  struct Direction {
    std::vector<Vec2> val_fluid, val_g0;
    std::vector<Mat2> grad_fluid, grad_g0;
  };
  Direction direction_from_displacement(const DiscreteField& k) const;
  static Direction direction_from_velocity(const ShapeVelocity& v);

  struct TransformDerivatives {
    std::vector<double> dJ_fluid, dJ_g0;
    std::vector<Mat2> dG_fluid, dG_g0, dF_fluid, dF_g0;
  };
  static TransformDerivatives differentiate(const TransformState& ts, const Direction& dir);

  enum class BcKind : uint8_t { Free, OnGamma0, OnOuter };
  struct BcInfo {
    BcKind kind = BcKind::Free;
    bool is_edge = false;
    int entity = -1; // mesh vertex or edge id for trace lookup
  };
  // Per scalar dof of the extension space: boundary classification.
  const std::vector<BcInfo>& extension_bc() const { return bc_; }

private:
  const Mesh* mesh_;
  QpTables qp_;
  FunctionSpace ext_scalar_; // ScalarP2 on fluid, all dofs
  FunctionSpace ext_vec_;    // VectorP2 on fluid, all dofs
  std::vector<BcInfo> bc_;
  LuSolver laplace_;

  TransformState sample_transform(const DiscreteField* w, const DiscreteField* ext,
                                  const VectorField* analytic, const ShapeVelocity* v,
                                  double t, double j_floor) const;
};

// Spec-level convenience wrappers over Kinematics::differentiate.
std::vector<double> dJ_dw(const Kinematics& kin, const TransformState& ts, const DiscreteField& k);
std::vector<Mat2> dG_dw(const Kinematics& kin, const TransformState& ts, const DiscreteField& k);
std::vector<Mat2> dF_dw(const Kinematics& kin, const TransformState& ts, const DiscreteField& k);
std::vector<double> dJ_dt(const TransformState& ts, const ShapeVelocity& v);
std::vector<Mat2> dG_dt(const TransformState& ts, const ShapeVelocity& v);
std::vector<Mat2> dF_dt(const TransformState& ts, const ShapeVelocity& v);

} // namespace fsi
