#pragma once

#include "dbf/assembly.hpp"
#include "dbf/log.hpp"
#include "dbf/problems.hpp"
#include "dbf/saddle.hpp"

#include <vector>

namespace dbf {

/// Relative FGMRES tolerances per Newton step. The first step of a loop
/// is solved loosely (warm starts make it a cheap cleanup); once the
/// predicted residual comes within reach of the Newton tolerance the
/// solve is tightened so the loop actually crosses it.
struct LinearTolerance {
  double first_step = 1e-3;
  double later_steps = 1e-6;
  double floor = 1e-14;
};

struct NewtonConfig {
  double tolerance = 1e-12;
  int max_iterations = 30;
  LinearTolerance linear;
  FgmresConfig fgmres;
  SchurConfig schur;
};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_history;  // R^0, R^1, ...
  std::vector<int> fgmres_history;       // per accepted step
  bool converged = false;
  std::string failure_reason;

  int fgmres_total() const {
    int total = 0;
    for (int n : fgmres_history) total += n;
    return total;
  }
};

/// Newton iteration with unit step and homogeneous update boundary data;
/// stops when the Euclidean norm of the constrained residual drops to
/// config.tolerance. `constraints` is the closed inhomogeneous set the
/// state satisfies; a failed step (residual growth beyond 10x) or an
/// exhausted linear solver yields a non-converged report carrying the
/// best iterate.
NewtonReport newton_solve(const ProblemSpec& problem, const Mesh& mesh,
                          const DofHandler& dofs, const ConstraintSet& constraints,
                          const ModelParams& params, SolutionState& state,
                          const NewtonConfig& config = {}, Logger logger = {},
                          int cycle = 0);

/// Cold-start strategy: zero interior plus boundary data for the linear
/// and mildly nonlinear variants; the full model warm-starts from a
/// converged Darcy-Brinkman solve; Navier-Stokes above Re 600 climbs the
/// continuation ladder Re in {100, 500, target}. Throws ConvergenceError
/// if a warm-start solve fails.
SolutionState initial_guess(const ProblemSpec& problem, const Mesh& mesh,
                            const DofHandler& dofs, const ConstraintSet& constraints,
                            const ModelParams& params, const NewtonConfig& config = {},
                            Logger logger = {});

}  // namespace dbf
