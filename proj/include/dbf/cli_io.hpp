#pragma once

#include "dbf/amr.hpp"
#include "dbf/assembly.hpp"
#include "dbf/problems.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace dbf {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  enum class Command { solve, converge };
  Command command = Command::solve;

  ProblemSpec::Kind problem = ProblemSpec::Kind::cavity;
  ModelVariant model = ModelVariant::dbf;
  double re = 1.0;
  double da = 1.0;
  double cf = 0.5;
  double gamma = 1.0;
  int global_refines = 5;
  int amr_cycles = 4;
  double newton_tol = 1e-12;
  std::string output_dir = ".";
  bool emit_vtk = false;
  bool emit_csv = true;
  int max_level = 5;  // converge ladder depth

  ModelParams params() const;
  ProblemSpec problem_spec() const;
};

/// Test-N coordinates of the Re/Da parameter study: group is "groupI"
/// (Re*Da < 1) or "groupII" (Re*Da > 1), test 1..9 row-major over
/// Re in {10, 100, 1000} and the three Da columns of the group.
std::pair<double, double> preset_parameters(const std::string& preset);

/// Parses `solve`/`converge` command lines (flags win over config-file
/// keys, unknown keys are rejected). Throws UsageError with the offending
/// key; `--help` raises UsageError with empty what().
RunConfig parse_config(const std::vector<std::string>& args);

/// Full CLI entry point. Exit codes: 0 success, 2 usage, 3 solver failure.
int run_cli(int argc, const char* const* argv);

int run_solve(const RunConfig& config);
int run_converge(const RunConfig& config);

/// Legacy ASCII VTK UNSTRUCTURED_GRID over the active cells; velocity as
/// a 3-vector (z = 0) and pressure as a scalar, both at the bilinear
/// corners. With subdivide, each active cell is split 2x2 so the Q2
/// mid-nodes become visible.
void write_vtk(const Mesh& mesh, const DofHandler& dofs, const SolutionState& state,
               const std::string& path, bool subdivide = false);

void write_centerline(const Profile& profile, const std::string& value_column,
                      const std::string& path);

struct ConvergenceRow {
  int dofs = 0;
  ErrorNorms errors;
};

/// CSV with per-level errors and the reduction factors
/// error(previous)/error(current); needs at least two rows.
void write_convergence_table(const std::vector<ConvergenceRow>& rows,
                             const std::string& path);

void write_cycle_table(const std::vector<CycleReport>& cycles, const std::string& path);

}  // namespace dbf
