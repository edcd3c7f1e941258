#pragma once

#include <optional>
#include <string>

#include "fsishape/assembly.hpp"

namespace fsi {

struct ProblemData {
  VectorField f; // fluid volume force, defined on the whole plane
  VectorField g; // structure volume force
  double nu = 1.0;
  double mu = 1.0;

  void validate() const {
    if (!(nu > 0.0) || !(mu > 0.0))
      throw Error(ErrorCode::InvalidConfig, "viscosity and shear modulus must be positive");
  }
};

struct SolverSettings {
  double tol_abs = 1e-11;
  double tol_rel = 1e-10;
  int max_iter = 100;
  double damping = 1.0; // plain Picard
  double j_min = 0.1;

  void validate() const {
    if (!(tol_abs > 0) || !(tol_rel > 0) || max_iter < 1 || !(damping > 0) || damping > 1.0)
      throw Error(ErrorCode::InvalidConfig, "invalid solver settings");
  }
};

// Spaces of the Taylor-Hood discretization plus the kinematics tables.
struct Discretization {
  const Mesh* mesh;
  Kinematics kin;
  FunctionSpace Vv; // transported velocity: vector P2, fluid, zero on whole fluid boundary
  FunctionSpace Qq; // transported pressure: scalar P1, fluid, zero mean via gauge
  FunctionSpace Ww; // displacement: vector P2, solid, zero on the support boundary
  FunctionSpace Ss; // incompressibility multiplier: scalar P1, solid

  explicit Discretization(const Mesh& m)
      : mesh(&m),
        kin(m),
        Vv(m, Region::Fluid, ElemKind::VectorP2, {BoundaryTag::Outer, BoundaryTag::Gamma0}),
        Qq(m, Region::Fluid, ElemKind::ScalarP1),
        Ww(m, Region::Solid, ElemKind::VectorP2, {BoundaryTag::GammaOmega}),
        Ss(m, Region::Solid, ElemKind::ScalarP1) {}

  std::vector<std::pair<int, double>> pressure_gauge(int q_offset) const;
};

struct FsiState {
  DiscreteField v, q, w, s;
};

struct IterRecord {
  int iter;
  double increment;
  double rate; // increment ratio, NaN on the first iteration
  double j_min;
};

enum class SolveStatus { Converged, MaxIterExceeded, NoninvertibleTransform };

struct FsiResult {
  SolveStatus status = SolveStatus::Converged;
  FsiState state;
  TransformState ts;       // transform at the converged displacement
  std::vector<IterRecord> trace;
  double final_increment = 0.0;
  int iterations = 0;
  std::string message;
};

// One fluid solve of the pulled-back Stokes system at a frozen transform.
std::pair<DiscreteField, DiscreteField> solve_perturbed_stokes(const Discretization& disc,
                                                               const TransformState& ts,
                                                               const ProblemData& data);

// Fluid-side traction samples at the interface quadrature points.
std::vector<Vec2> interface_traction(const Discretization& disc, const TransformState& ts,
                                     const DiscreteField& v, const DiscreteField& q, double nu);

// One structure solve with prescribed interface traction.
std::pair<DiscreteField, DiscreteField> solve_structure_mixed(const Discretization& disc,
                                                              const std::vector<Vec2>& traction,
                                                              const ProblemData& data,
                                                              const SolidMap& phi);

// Picard iteration on the displacement. When (velocity, t) describe a domain
// perturbation, the solve runs on the t-transported system so the whole
// t-family lives on the one reference mesh.
FsiResult run_fixed_point(const Discretization& disc, const ProblemData& data,
                          const SolverSettings& settings, const ShapeVelocity* velocity = nullptr,
                          double t = 0.0);

// Throwing wrapper: MAX_ITER_EXCEEDED / NONINVERTIBLE_TRANSFORM on failure.
FsiResult fsi_fixed_point(const Discretization& disc, const ProblemData& data,
                          const SolverSettings& settings);

} // namespace fsi
