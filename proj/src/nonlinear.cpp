#include "dbf/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace dbf {

namespace {

void check_dirichlet(const ConstraintSet& constraints, const SolutionState& state) {
  const int n_u = static_cast<int>(state.u.size());
  for (const auto& [dof, line] : constraints.lines()) {
    if (dof >= n_u || !line.masters.empty()) continue;
    if (std::abs(state.u[dof] - line.inhomogeneity) > 1e-12)
      throw std::invalid_argument("newton_solve: initial guess violates Dirichlet data");
  }
}

}  // namespace

NewtonReport newton_solve(const ProblemSpec& problem, const Mesh& mesh,
                          const DofHandler& dofs, const ConstraintSet& constraints,
                          const ModelParams& params, SolutionState& state,
                          const NewtonConfig& config, Logger logger, int cycle) {
  params.validate();
  check_dirichlet(constraints, state);
  const ConstraintSet update_constraints = constraints.homogeneous();
  const ForcingFunction forcing = problem.forcing_for(params);

  NewtonReport report;
  AssemblyCache cache;
  std::optional<BlockPreconditioner> reusable_precondition;

  double residual_norm =
      assemble_residual(mesh, dofs, update_constraints, state, params, forcing).norm;
  report.residual_history.push_back(residual_norm);

  auto log_iteration = [&](int iter, double res, int fgmres) {
    if (!logger) return;
    std::ostringstream line;
    line << "newton cycle=" << cycle << " iter=" << iter << " residual=" << res
         << " fgmres=" << fgmres;
    logger.line(line.str());
  };
  log_iteration(0, residual_norm, 0);

  if (residual_norm <= config.tolerance) {
    report.converged = true;
    state.residual_norm = residual_norm;
    state.newton_iterations = 0;
    return report;
  }

  SolutionState best = state;
  double best_norm = residual_norm;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const BlockSystem system = assemble_newton_system(
        mesh, dofs, update_constraints, state, params, forcing, &cache);

    double rel_tol =
        (iter == 1) ? config.linear.first_step : config.linear.later_steps;
    // tighten once the Newton tolerance is within reach of this solve
    if (rel_tol * residual_norm <= 10.0 * config.tolerance)
      rel_tol = std::min(rel_tol, 0.25 * config.tolerance / residual_norm);
    rel_tol = std::max(rel_tol, config.linear.floor);

    NewtonStepResult step;
    try {
      if (params.is_linear()) {
        // constant matrix: factor A_gamma once per mesh
        if (!reusable_precondition)
          reusable_precondition.emplace(system, params, config.schur);
        step = solve_newton_step(system, *reusable_precondition, update_constraints,
                                 rel_tol, config.fgmres, logger);
      } else {
        const BlockPreconditioner precondition(system, params, config.schur);
        step = solve_newton_step(system, precondition, update_constraints, rel_tol,
                                 config.fgmres, logger);
      }
    } catch (const ConvergenceError& err) {
      report.failure_reason = err.what();
      state = best;
      state.residual_norm = best_norm;
      state.newton_iterations = report.iterations;
      log_iteration(iter, best_norm, -1);
      return report;
    }

    state.u += step.du;
    state.p += step.dp;
    report.iterations = iter;
    report.fgmres_history.push_back(step.fgmres_iterations);

    const double new_norm =
        assemble_residual(mesh, dofs, update_constraints, state, params, forcing).norm;
    report.residual_history.push_back(new_norm);
    log_iteration(iter, new_norm, step.fgmres_iterations);

    if (new_norm > 10.0 * residual_norm) {
      report.failure_reason = "residual increased more than tenfold";
      state = best;
      state.residual_norm = best_norm;
      state.newton_iterations = report.iterations;
      return report;
    }
    if (new_norm < best_norm) {
      best = state;
      best_norm = new_norm;
    }
    residual_norm = new_norm;
    if (residual_norm <= config.tolerance) {
      report.converged = true;
      state.residual_norm = residual_norm;
      state.newton_iterations = iter;
      return report;
    }
  }

  report.failure_reason = "Newton budget exhausted";
  state = best;
  state.residual_norm = best_norm;
  state.newton_iterations = report.iterations;
  return report;
}

namespace {

SolutionState boundary_state(const DofHandler& dofs, const ConstraintSet& constraints) {
  SolutionState state = SolutionState::zero(dofs);
  constraints.distribute(state.u, state.p);
  return state;
}

SolutionState continuation_ladder(const ProblemSpec& problem, const Mesh& mesh,
                                  const DofHandler& dofs, const ConstraintSet& constraints,
                                  const ModelParams& params, const NewtonConfig& config,
                                  Logger logger) {
  SolutionState state = boundary_state(dofs, constraints);
  std::vector<double> rungs;
  for (double re : {100.0, 500.0})
    if (re < params.re) rungs.push_back(re);
  for (double re : rungs) {
    ModelParams rung = params;
    rung.re = re;
    if (logger) logger.line("initial_guess continuation re=" + std::to_string(re));
    const NewtonReport report =
        newton_solve(problem, mesh, dofs, constraints, rung, state, config, logger, 0);
    if (!report.converged)
      throw ConvergenceError("initial_guess: continuation stage failed (" +
                                 report.failure_reason + ")",
                             state.u, report.iterations);
  }
  return state;
}

}  // namespace

SolutionState initial_guess(const ProblemSpec& problem, const Mesh& mesh,
                            const DofHandler& dofs, const ConstraintSet& constraints,
                            const ModelParams& params, const NewtonConfig& config,
                            Logger logger) {
  params.validate();

  if (params.variant == ModelVariant::dbf) {
    // the full model starts from a converged Darcy-Brinkman solve
    ModelParams db = params;
    db.variant = ModelVariant::darcy_brinkman;
    SolutionState state = initial_guess(problem, mesh, dofs, constraints, db, config, logger);
    if (logger) logger.line("initial_guess darcy-brinkman warm start");
    const NewtonReport report =
        newton_solve(problem, mesh, dofs, constraints, db, state, config, logger, 0);
    if (!report.converged)
      throw ConvergenceError("initial_guess: Darcy-Brinkman warm start failed (" +
                                 report.failure_reason + ")",
                             state.u, report.iterations);
    return state;
  }

  if (params.has_convection() && params.re > 600.0)
    return continuation_ladder(problem, mesh, dofs, constraints, params, config, logger);

  return boundary_state(dofs, constraints);
}

}  // namespace dbf
