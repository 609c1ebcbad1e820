#include "dbf/cli_io.hpp"

#include "dbf/elements.hpp"
#include "dbf/numio.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace dbf {

namespace {

const std::map<std::string, ModelVariant> kModelNames = {
    {"brinkman", ModelVariant::brinkman},
    {"darcy-brinkman", ModelVariant::darcy_brinkman},
    {"dbf", ModelVariant::dbf},
    {"navier-stokes", ModelVariant::navier_stokes},
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

ModelParams RunConfig::params() const {
  ModelParams p;
  p.re = re;
  p.da = da;
  p.c_f = cf;
  p.gamma = gamma;
  p.variant = model;
  return p;
}

ProblemSpec RunConfig::problem_spec() const {
  return problem == ProblemSpec::Kind::mms ? ProblemSpec::mms() : ProblemSpec::cavity();
}

std::pair<double, double> preset_parameters(const std::string& preset) {
  const auto colon = preset.find(':');
  if (colon == std::string::npos)
    throw UsageError("preset must look like groupI:test5, got '" + preset + "'");
  const std::string group = preset.substr(0, colon);
  const std::string test = preset.substr(colon + 1);
  if (test.size() != 5 || test.rfind("test", 0) != 0 || test[4] < '1' || test[4] > '9')
    throw UsageError("preset test must be test1..test9, got '" + preset + "'");
  const int n = test[4] - '1';  // 0..8
  static const double kRe[3] = {10.0, 100.0, 1000.0};
  static const double kDaGroupI[3] = {2.5e-6, 2.5e-5, 2.5e-4};
  static const double kDaGroupII[3] = {2.5e-1, 2.5e+0, 2.5e+1};
  const double re = kRe[n / 3];
  if (group == "groupI") return {re, kDaGroupI[n % 3]};
  if (group == "groupII") return {re, kDaGroupII[n % 3]};
  throw UsageError("preset group must be groupI or groupII, got '" + preset + "'");
}

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Mixed finite element solver for steady porous-media cavity flow"};
  app.require_subcommand(1);
  app.fallthrough(false);

  RunConfig config;
  std::string preset;

  CLI::App* solve = app.add_subcommand("solve", "solve one problem with AMR cycles");
  solve->set_config("--config", "", "flat key = value configuration file");
  std::string problem_name = "cavity", model_name = "dbf";
  solve->add_option("--problem", problem_name, "mms or cavity")
      ->check(CLI::IsMember({"mms", "cavity"}));
  solve->add_option("--model", model_name, "brinkman, darcy-brinkman, dbf, navier-stokes")
      ->check(CLI::IsMember({"brinkman", "darcy-brinkman", "dbf", "navier-stokes"}));
  solve->add_option("--preset", preset, "parameter-study point, e.g. groupI:test9");
  auto* re_opt = solve->add_option("--re", config.re, "Reynolds number");
  auto* da_opt = solve->add_option("--da", config.da, "Darcy number");
  auto* cf_opt = solve->add_option("--cf", config.cf, "Forchheimer coefficient");
  solve->add_option("--gamma", config.gamma, "grad-div parameter")->capture_default_str();
  solve->add_option("--global-refines", config.global_refines, "uniform refinements")->capture_default_str();
  solve->add_option("--amr-cycles", config.amr_cycles, "adaptive cycles")->capture_default_str();
  solve->add_option("--newton-tol", config.newton_tol, "Newton residual tolerance")->capture_default_str();
  solve->add_option("--output-dir", config.output_dir, "output directory")->capture_default_str();
  solve->add_flag("--vtk", config.emit_vtk, "write the final solution as VTK");
  solve->add_flag("--csv,!--no-csv", config.emit_csv, "write machine-readable CSVs");

  CLI::App* converge = app.add_subcommand("converge", "uniform-mesh convergence ladder");
  converge->add_option("--max-level", config.max_level, "finest uniform level")
      ->check(CLI::PositiveNumber);
  converge->add_option("--output-dir", config.output_dir, "output directory");
  converge->add_option("--gamma", config.gamma, "grad-div parameter");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    throw UsageError("");
  } catch (const CLI::ParseError& err) {
    throw UsageError(std::string(err.what()) + "\n\n" + app.help());
  }

  if (app.got_subcommand(converge)) {
    config.command = RunConfig::Command::converge;
    config.problem = ProblemSpec::Kind::mms;
    config.model = ModelVariant::dbf;
    config.re = config.da = config.cf = 1.0;
    return config;
  }

  config.command = RunConfig::Command::solve;
  config.problem =
      problem_name == "mms" ? ProblemSpec::Kind::mms : ProblemSpec::Kind::cavity;
  config.model = kModelNames.at(model_name);

  const bool mms = config.problem == ProblemSpec::Kind::mms;
  if (!preset.empty()) {
    if (re_opt->count() || da_opt->count())
      throw UsageError("--preset conflicts with explicit --re/--da");
    std::tie(config.re, config.da) = preset_parameters(preset);
  } else {
    if (!re_opt->count()) {
      if (!mms) throw UsageError("cavity runs need --preset or --re/--da");
      config.re = 1.0;
    }
    if (!da_opt->count()) {
      if (!mms && config.model != ModelVariant::navier_stokes)
        throw UsageError("cavity runs need --preset or --re/--da");
      config.da = 1.0;
    }
  }
  if (mms && !cf_opt->count()) config.cf = 1.0;

  if (!(config.re > 0)) throw UsageError("--re must be positive");
  if (!(config.da > 0)) throw UsageError("--da must be positive");
  if (config.cf < 0) throw UsageError("--cf must be nonnegative");
  if (config.gamma < 0) throw UsageError("--gamma must be nonnegative");
  if (!(config.newton_tol > 0)) throw UsageError("--newton-tol must be positive");
  if (config.global_refines < 0 || config.amr_cycles < 0)
    throw UsageError("refinement counts must be nonnegative");
  return config;
}

void write_vtk(const Mesh& mesh, const DofHandler& dofs, const SolutionState& state,
               const std::string& path, bool subdivide) {
  std::ofstream out = open_output(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "steady porous-media cavity solution\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";

  // lexicographic Q2 sub-quads of one cell: corner ids into cell_unodes
  static constexpr int kSubQuads[4][4] = {
      {0, 1, 4, 3}, {1, 2, 5, 4}, {3, 4, 7, 6}, {4, 5, 8, 7}};

  if (!subdivide) {
    const int n_points = dofs.n_pressure_dofs();
    out << "POINTS " << n_points << " double\n";
    for (int node = 0; node < n_points; ++node) {
      const Vec2& x = dofs.pressure_node(node);
      out << format_shortest(x[0]) << " " << format_shortest(x[1]) << " 0\n";
    }
    const int n_cells = mesh.n_active();
    out << "CELLS " << n_cells << " " << 5 * n_cells << "\n";
    for (int cell_id : mesh.active_cells()) {
      const auto& pn = dofs.cell_pnodes(cell_id);
      out << "4 " << pn[0] << " " << pn[1] << " " << pn[3] << " " << pn[2] << "\n";
    }
    out << "CELL_TYPES " << n_cells << "\n";
    for (int k = 0; k < n_cells; ++k) out << "9\n";

    // velocity lives at the Q2 corner nodes that coincide with the points
    std::vector<Vec2> velocity(n_points, Vec2::Zero());
    static constexpr int kCornerU[4] = {0, 2, 6, 8};
    for (int cell_id : mesh.active_cells()) {
      const auto& pn = dofs.cell_pnodes(cell_id);
      const auto& un = dofs.cell_unodes(cell_id);
      for (int k = 0; k < 4; ++k)
        velocity[pn[k]] =
            Vec2(state.u[2 * un[kCornerU[k]]], state.u[2 * un[kCornerU[k]] + 1]);
    }
    out << "POINT_DATA " << n_points << "\n";
    out << "VECTORS velocity double\n";
    for (const Vec2& v : velocity)
      out << format_shortest(v[0]) << " " << format_shortest(v[1]) << " 0\n";
    out << "SCALARS pressure double\nLOOKUP_TABLE default\n";
    for (int node = 0; node < n_points; ++node) out << format_shortest(state.p[node]) << "\n";
    return;
  }

  const int n_points = dofs.n_velocity_nodes();
  out << "POINTS " << n_points << " double\n";
  for (int node = 0; node < n_points; ++node) {
    const Vec2& x = dofs.velocity_node(node);
    out << format_shortest(x[0]) << " " << format_shortest(x[1]) << " 0\n";
  }
  const int n_cells = 4 * mesh.n_active();
  out << "CELLS " << n_cells << " " << 5 * n_cells << "\n";
  for (int cell_id : mesh.active_cells()) {
    const auto& un = dofs.cell_unodes(cell_id);
    for (const auto& quad : kSubQuads)
      out << "4 " << un[quad[0]] << " " << un[quad[1]] << " " << un[quad[2]] << " "
          << un[quad[3]] << "\n";
  }
  out << "CELL_TYPES " << n_cells << "\n";
  for (int k = 0; k < n_cells; ++k) out << "9\n";

  // pressure is interpolated to the Q2 lattice of each cell
  std::vector<double> pressure(n_points, 0.0);
  const auto& q1 = ReferenceElement::q1();
  for (int cell_id : mesh.active_cells()) {
    const auto& un = dofs.cell_unodes(cell_id);
    const auto& pn = dofs.cell_pnodes(cell_id);
    for (int a = 0; a < 9; ++a) {
      const Vec2 xi(0.5 * (a % 3), 0.5 * (a / 3));
      double value = 0;
      for (int b = 0; b < 4; ++b) value += state.p[pn[b]] * q1.shape_value(b, xi);
      pressure[un[a]] = value;
    }
  }
  out << "POINT_DATA " << n_points << "\n";
  out << "VECTORS velocity double\n";
  for (int node = 0; node < n_points; ++node)
    out << format_shortest(state.u[2 * node]) << " "
        << format_shortest(state.u[2 * node + 1]) << " 0\n";
  out << "SCALARS pressure double\nLOOKUP_TABLE default\n";
  for (double p : pressure) out << format_shortest(p) << "\n";
}

void write_centerline(const Profile& profile, const std::string& value_column,
                      const std::string& path) {
  std::ofstream out = open_output(path);
  out << "coord," << value_column << "\n";
  for (size_t i = 0; i < profile.coord.size(); ++i)
    out << format_shortest(profile.coord[i]) << "," << format_shortest(profile.value[i])
        << "\n";
}

void write_convergence_table(const std::vector<ConvergenceRow>& rows,
                             const std::string& path) {
  if (rows.size() < 2)
    throw std::invalid_argument("write_convergence_table: need at least 2 ladder rows");
  std::ofstream out = open_output(path);
  out << "DoFs,L2_u,rate_L2_u,H1_u,rate_H1_u,L2_p,rate_L2_p\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto rate = [&](double prev, double curr) {
      return i == 0 ? std::string() : format_shortest(prev / curr);
    };
    const ErrorNorms* prev = i == 0 ? nullptr : &rows[i - 1].errors;
    out << r.dofs << "," << format_shortest(r.errors.l2_u) << ","
        << (prev ? rate(prev->l2_u, r.errors.l2_u) : "") << ","
        << format_shortest(r.errors.h1_u) << ","
        << (prev ? rate(prev->h1_u, r.errors.h1_u) : "") << ","
        << format_shortest(r.errors.l2_p) << ","
        << (prev ? rate(prev->l2_p, r.errors.l2_p) : "") << "\n";
  }
}

void write_cycle_table(const std::vector<CycleReport>& cycles, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "cycle,active_cells,dofs,newton_iterations,fgmres_total\n";
  for (const auto& c : cycles)
    out << c.cycle << "," << c.active_cells << "," << c.dofs << ","
        << c.newton.iterations << "," << c.newton.fgmres_total() << "\n";
}

namespace {

void echo_config(Logger& log, const RunConfig& config) {
  std::ostringstream line;
  line << "run problem=" << (config.problem == ProblemSpec::Kind::mms ? "mms" : "cavity")
       << " model=";
  for (const auto& [name, variant] : kModelNames)
    if (variant == config.model) line << name;
  line << " re=" << format_shortest(config.re) << " da=" << format_shortest(config.da)
       << " cf=" << format_shortest(config.cf)
       << " gamma=" << format_shortest(config.gamma)
       << " global_refines=" << config.global_refines
       << " amr_cycles=" << config.amr_cycles
       << " newton_tol=" << format_shortest(config.newton_tol);
  log.line(line.str());
}

}  // namespace

int run_solve(const RunConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  std::ofstream log_file(config.output_dir + "/run.log");
  Logger logger(&log_file);
  echo_config(logger, config);

  AmrConfig amr;
  amr.n_global_refines = config.global_refines;
  amr.max_cycles = config.amr_cycles;
  amr.newton.tolerance = config.newton_tol;

  const ProblemSpec problem = config.problem_spec();
  const ModelParams params = config.params();

  std::vector<ConvergenceRow> convergence;
  CycleObserver observer;
  if (config.problem == ProblemSpec::Kind::mms)
    observer = [&](const CycleReport& report, const Mesh& mesh, const DofHandler& dofs,
                   const SolutionState& state) {
      if (!report.newton.converged) return;
      convergence.push_back({dofs.n_total_dofs(), error_norms(mesh, dofs, state)});
    };

  const AmrResult result = amr_loop(problem, params, amr, logger, observer);

  if (config.emit_csv)
    write_cycle_table(result.cycles, config.output_dir + "/cycles.csv");
  if (result.converged && config.emit_csv) {
    if (config.problem == ProblemSpec::Kind::cavity) {
      const CenterlineProfiles profiles =
          centerline_profiles(*result.mesh, *result.dofs, result.state);
      write_centerline(profiles.ux_on_vertical, "u_x",
                       config.output_dir + "/centerline_ux.csv");
      write_centerline(profiles.uy_on_horizontal, "u_y",
                       config.output_dir + "/centerline_uy.csv");
    } else if (convergence.size() >= 2) {
      write_convergence_table(convergence, config.output_dir + "/convergence.csv");
    } else if (!convergence.empty()) {
      // single-row ladder: emit the header and the one row without rates
      std::ofstream out = open_output(config.output_dir + "/convergence.csv");
      out << "DoFs,L2_u,rate_L2_u,H1_u,rate_H1_u,L2_p,rate_L2_p\n";
      out << convergence[0].dofs << "," << format_shortest(convergence[0].errors.l2_u)
          << ",," << format_shortest(convergence[0].errors.h1_u) << ",,"
          << format_shortest(convergence[0].errors.l2_p) << ",\n";
    }
  }
  if (result.converged && config.emit_vtk)
    write_vtk(*result.mesh, *result.dofs, result.state,
              config.output_dir + "/solution.vtk");

  if (!result.converged) {
    logger.line("run failed: solver did not converge");
    std::cerr << "solver did not converge\n";
    return 3;
  }
  logger.line("run finished");
  return 0;
}

int run_converge(const RunConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  std::ofstream log_file(config.output_dir + "/run.log");
  Logger logger(&log_file);
  echo_config(logger, config);

  std::vector<ConvergenceRow> rows;
  for (int level = 1; level <= config.max_level; ++level) {
    AmrConfig amr;
    amr.n_global_refines = level;
    amr.max_cycles = 0;
    amr.newton.tolerance = config.newton_tol;
    const AmrResult result =
        amr_loop(ProblemSpec::mms(), config.params(), amr, logger);
    if (!result.converged) {
      logger.line("run failed: solver did not converge");
      std::cerr << "solver did not converge at level " << level << "\n";
      return 3;
    }
    rows.push_back(
        {result.dofs->n_total_dofs(), error_norms(*result.mesh, *result.dofs, result.state)});
  }
  write_convergence_table(rows, config.output_dir + "/convergence.csv");
  logger.line("run finished");
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  RunConfig config;
  try {
    config = parse_config(args);
  } catch (const UsageError& err) {
    if (err.what()[0] == '\0') return 0;  // --help
    std::cerr << err.what() << "\n";
    return 2;
  }
  try {
    return config.command == RunConfig::Command::solve ? run_solve(config)
                                                       : run_converge(config);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
}

}  // namespace dbf
