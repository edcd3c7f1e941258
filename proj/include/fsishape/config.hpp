#pragma once

#include "fsishape/validation.hpp"

namespace fsi {

// Run configuration: sectioned key/value text, expressions as quoted strings.
// Unknown sections or keys are rejected.
struct RunConfig {
  GeometryConfig geometry;
  std::string mesh_file; // optional: load this mesh instead of generating
  ProblemData physics;
  SolverSettings solver;
  FunctionalSpec functional = FunctionalSpec::energy();
  std::vector<std::pair<std::string, VectorField>> directions;
  StudyPlan study;
  std::string output_dir = "out";
  std::string raw_text;

  static RunConfig parse(const std::string& text);
  static RunConfig parse_file(const std::string& path);

  ValidationContext validation_context() const {
    return {geometry, physics, solver, functional, directions};
  }
};

int run_cli(int argc, char** argv);

} // namespace fsi
