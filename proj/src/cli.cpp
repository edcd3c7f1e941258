#include "fsishape/config.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

namespace fsi {

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  bool with_fd = false;
  bool check_only = false;
  int64_t seed = -1;
};

RunConfig load_config(const CliOptions& opt) {
  RunConfig cfg = RunConfig::parse_file(opt.config_path);
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  if (opt.seed >= 0) cfg.study.seed = static_cast<uint64_t>(opt.seed);
  return cfg;
}

Mesh obtain_mesh(const RunConfig& cfg) {
  if (!cfg.mesh_file.empty()) return load_mesh(cfg.mesh_file);
  return generate_annular_mesh(cfg.geometry);
}

void write_iteration_trace(const std::string& path, const std::vector<IterRecord>& trace) {
  CsvWriter csv({"iter", "increment_norm", "rate", "j_min"});
  for (const auto& r : trace)
    csv.row({CsvWriter::num(r.iter), CsvWriter::num(r.increment),
             std::isnan(r.rate) ? "" : CsvWriter::num(r.rate), CsvWriter::num(r.j_min)});
  csv.write(path);
}

int cmd_mesh(const CliOptions& opt) {
  RunConfig cfg = load_config(opt);
  if (opt.check_only) return 0;
  ensure_directory(cfg.output_dir);
  Mesh mesh = obtain_mesh(cfg);
  save_mesh(mesh, cfg.output_dir + "/mesh.txt");

  double solid_area = 0, fluid_area = 0;
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    double a = mesh.tri_area(static_cast<int>(t));
    (mesh.tris[t].region == Region::Solid ? solid_area : fluid_area) += a;
  }
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "nodes: %zu\ntriangles: %zu (solid %d, fluid %d)\nboundary edges: %zu\n"
                "min angle: %.4f deg\nsolid area: %.8f\nfluid area: %.8f\n",
                mesh.nodes.size(), mesh.tris.size(), mesh.tri_count(Region::Solid),
                mesh.tri_count(Region::Fluid), mesh.bedges.size(), mesh.min_angle_deg(),
                solid_area, fluid_area);
  write_file(cfg.output_dir + "/quality.txt", buf);
  write_manifest(cfg.output_dir + "/manifest.txt", cfg.raw_text, "mesh");
  std::cout << buf;
  return 0;
}

int cmd_solve(const CliOptions& opt) {
  RunConfig cfg = load_config(opt);
  if (opt.check_only) return 0;
  ensure_directory(cfg.output_dir);
  Mesh mesh = obtain_mesh(cfg);
  Discretization disc(mesh);
  FsiResult res = run_fixed_point(disc, cfg.physics, cfg.solver);
  write_iteration_trace(cfg.output_dir + "/trace.csv", res.trace);
  write_manifest(cfg.output_dir + "/manifest.txt", cfg.raw_text, "solve");
  if (res.status == SolveStatus::MaxIterExceeded) {
    std::cerr << "MAX_ITER_EXCEEDED: " << res.message << "\n";
    return 3;
  }
  if (res.status == SolveStatus::NoninvertibleTransform) {
    std::cerr << "NONINVERTIBLE_TRANSFORM: " << res.message << "\n";
    return 4;
  }
  write_vtk(cfg.output_dir + "/fluid.vtk", mesh, Region::Fluid,
            {{"velocity", &res.state.v}}, {{"pressure", &res.state.q}});
  write_vtk(cfg.output_dir + "/solid.vtk", mesh, Region::Solid,
            {{"displacement", &res.state.w}}, {{"multiplier", &res.state.s}});
  double j = eval_functional(disc, cfg.functional, res.state, res.ts);
  char buf[160];
  std::snprintf(buf, sizeof buf, "functional %s = %.17g\niterations = %d\nfinal increment = %.3e\n",
                cfg.functional.name.c_str(), j, res.iterations, res.final_increment);
  std::cout << buf;
  return 0;
}

int cmd_derive(const CliOptions& opt) {
  RunConfig cfg = load_config(opt);
  if (opt.check_only) return 0;
  ensure_directory(cfg.output_dir);
  Mesh mesh = obtain_mesh(cfg);
  Discretization disc(mesh);

  FsiResult probe = run_fixed_point(disc, cfg.physics, cfg.solver);
  if (probe.status == SolveStatus::MaxIterExceeded) {
    std::cerr << "MAX_ITER_EXCEEDED: " << probe.message << "\n";
    return 3;
  }
  if (probe.status == SolveStatus::NoninvertibleTransform) {
    std::cerr << "NONINVERTIBLE_TRANSFORM: " << probe.message << "\n";
    return 4;
  }

  auto reports = shape_gradient_reports(disc, cfg.physics, cfg.solver, cfg.functional,
                                        cfg.directions, cfg.study.fd_steps, opt.with_fd);
  write_file(cfg.output_dir + "/derive.csv", report_csv(reports));
  std::string summary;
  for (const auto& r : reports) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: direct=%.10e adjoint=%.10e fd_order=%.2f %s\n",
                  r.direction.c_str(), r.derivative_direct, r.derivative_adjoint, r.fd_order,
                  r.error.empty() ? "ok" : r.error.c_str());
    summary += buf;
  }
  write_file(cfg.output_dir + "/summary.txt", summary);
  write_manifest(cfg.output_dir + "/manifest.txt", cfg.raw_text, "derive");
  std::cout << summary;
  return 0;
}

int cmd_validate(const CliOptions& opt) {
  RunConfig cfg = load_config(opt);
  if (opt.check_only) return 0;
  ensure_directory(cfg.output_dir);
  auto results = run_studies(cfg.validation_context(), cfg.study);
  std::string summary;
  bool all_pass = true;
  for (const auto& r : results) {
    write_file(cfg.output_dir + "/" + r.name + ".csv", r.csv);
    summary += r.summary;
    all_pass = all_pass && r.pass;
  }
  write_file(cfg.output_dir + "/summary.txt", summary);
  write_manifest(cfg.output_dir + "/manifest.txt", cfg.raw_text, "validate");
  std::cout << summary;
  return all_pass ? 0 : 5;
}

} // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"stationary fluid-structure interaction solver with shape sensitivities"};
  app.require_subcommand(1);
  CliOptions opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "run configuration file")->required();
    sub->add_option("--out", opt.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", opt.seed, "seed override for studies");
    sub->add_flag("--check-only", opt.check_only, "validate the configuration and exit");
  };
  CLI::App* mesh = app.add_subcommand("mesh", "generate the mesh and a quality report");
  add_common(mesh);
  CLI::App* solve = app.add_subcommand("solve", "solve the coupled problem");
  add_common(solve);
  CLI::App* derive = app.add_subcommand("derive", "compute shape derivatives");
  add_common(derive);
  derive->add_flag("--with-fd", opt.with_fd, "add finite-difference reference values");
  CLI::App* validate = app.add_subcommand("validate", "run the validation studies");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(mesh)) return cmd_mesh(opt);
    if (app.got_subcommand(solve)) return cmd_solve(opt);
    if (app.got_subcommand(derive)) return cmd_derive(opt);
    if (app.got_subcommand(validate)) return cmd_validate(opt);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::NestingViolation:
      case ErrorCode::QualityFailure:
      case ErrorCode::InvalidMesh:
      case ErrorCode::TangledMesh:
        return 2;
      case ErrorCode::MaxIterExceeded:
        return 3;
      case ErrorCode::NoninvertibleTransform:
        return 4;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

} // namespace fsi
