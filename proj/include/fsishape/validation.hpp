#pragma once

#include <random>

#include "fsishape/io.hpp"
#include "fsishape/sensitivity.hpp"

namespace fsi {

enum class StudyKind { MmsStokes, MmsStructure, ContractionSweep, ShapeFd, PiolaRefine };

StudyKind study_kind_from_string(const std::string& s);
std::string to_string(StudyKind k);

struct StudyPlan {
  std::vector<StudyKind> kinds;
  int levels = 3;
  std::vector<double> load_scales = {0.05, 0.1, 0.2, 0.4};
  std::vector<double> fd_steps = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
  uint64_t seed = 1;

  void validate() const;
};

struct ValidationContext {
  GeometryConfig geometry;
  ProblemData data;
  SolverSettings settings;
  FunctionalSpec functional = FunctionalSpec::energy();
  std::vector<std::pair<std::string, VectorField>> directions;
};

struct StudyResult {
  std::string name;
  bool pass = true;
  std::string summary; // one or more "PASS/FAIL ..." lines
  std::string csv;
};

struct ShapeGradientReport {
  std::string direction;
  double value = 0.0;
  double derivative_direct = 0.0;
  double derivative_adjoint = 0.0;
  std::vector<double> fd_steps;
  std::vector<double> fd_values; // NaN where the perturbed solve failed
  double fd_extrapolated = std::nan("");
  double fd_order = std::nan("");
  double gap_direct_adjoint = std::nan("");
  double gap_vs_fd = std::nan("");
  bool valid_direction = true;
  std::string error;
};

// Manufactured solutions, derived symbolically so the forcing is exact.
struct StokesMms {
  VectorField velocity;  // physical velocity, compactly supported in the fluid
  Expr pressure;
  VectorField force;     // -nu lap(u) + grad(p)
  VectorField extension; // analytic transform extension for the perturbed variant
};
StokesMms make_stokes_mms(const GeometryConfig& geo, double nu);

struct StructureMms {
  VectorField displacement; // vanishes to high order on the support boundary
  Expr multiplier;
  VectorField force; // -mu lap(w) + grad(s)
  double mu;
};
StructureMms make_structure_mms(const GeometryConfig& geo, double mu);

// Per-level errors of one MMS solve; level k doubles the grid counts k times.
struct MmsErrors {
  double h;
  int dofs;
  double vel_l2, vel_h1, pres_l2;
};
MmsErrors mms_stokes_level(const GeometryConfig& geo, int level, double nu, const StokesMms& mms,
                           bool perturbed);
MmsErrors mms_structure_level(const GeometryConfig& geo, int level, const StructureMms& mms);

StudyResult run_mms(const ValidationContext& ctx, const StudyPlan& plan, StudyKind kind);
StudyResult run_contraction_sweep(const ValidationContext& ctx, const StudyPlan& plan);
StudyResult run_piola_refine(const ValidationContext& ctx, const StudyPlan& plan);
StudyResult run_shape_fd(const ValidationContext& ctx, const StudyPlan& plan,
                         std::vector<ShapeGradientReport>* reports_out = nullptr);

std::vector<StudyResult> run_studies(const ValidationContext& ctx, const StudyPlan& plan);

// Derivative reports for a solved configuration (drives both the study above
// and the CLI derive command).
std::vector<ShapeGradientReport> shape_gradient_reports(
    const Discretization& disc, const ProblemData& data, const SolverSettings& settings,
    const FunctionalSpec& spec, const std::vector<std::pair<std::string, VectorField>>& directions,
    const std::vector<double>& fd_steps, bool with_fd);

std::string report_csv(const std::vector<ShapeGradientReport>& reports);

// Least-squares slope of log(err) against log(h or t).
double observed_order(const std::vector<double>& x, const std::vector<double>& err);

// Deterministic uniform double in [lo, hi) from a seeded engine.
double uniform(std::mt19937_64& rng, double lo, double hi);

} // namespace fsi
