#include "dbf/saddle.hpp"

#include <cmath>
#include <sstream>

namespace dbf {

BlockPreconditioner::BlockPreconditioner(const BlockSystem& system,
                                         const ModelParams& params, SchurConfig config)
    : b_(system.b),
      m_p_(system.m_p),
      lu_a_gamma_(lu_factorize(system.a_gamma)),
      nu_(params.viscous_coefficient()),
      gamma_(params.gamma),
      config_(config) {
  mp_inv_diag_ = m_p_.diagonal().cwiseInverse();
}

void BlockPreconditioner::apply(const Vector& r_u, const Vector& r_p, Vector& z_u,
                                Vector& z_p) const {
  const auto jacobi = [this](const Vector& x, Vector& y) {
    y = x.cwiseProduct(mp_inv_diag_);
  };
  const auto mp_solve =
      cg_solve(m_p_, r_p, jacobi, config_.mp_rel_tol, config_.mp_max_iterations);
  z_p = -(nu_ + gamma_) * mp_solve.x;
  z_u = lu_a_gamma_.solve(r_u - b_.multiply_transpose(z_p));
}

void BlockPreconditioner::apply(const Vector& r, Vector& z) const {
  const int nu = lu_a_gamma_.rows(), np = m_p_.rows();
  Vector z_u(nu), z_p(np);
  apply(r.head(nu), r.tail(np), z_u, z_p);
  z.resize(nu + np);
  z.head(nu) = z_u;
  z.tail(np) = z_p;
}

NewtonStepResult solve_newton_step(const BlockSystem& system,
                                   const BlockPreconditioner& precondition,
                                   const ConstraintSet& update_constraints,
                                   double rel_tol, const FgmresConfig& config,
                                   Logger logger) {
  const int n_u = system.n_u(), n_p = system.n_p();

  // Enclosed flow leaves the pressure defined up to a constant; the packed
  // rhs is projected onto the range of the operator (constants over the
  // unconstrained pressure DoFs span the left null space).
  Vector rhs(n_u + n_p);
  rhs.head(n_u) = system.rhs_u;
  rhs.tail(n_p) = system.rhs_p;
  {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n_p; ++i)
      if (system.pressure_diag[i] == 0.0) {
        sum += rhs[n_u + i];
        ++count;
      }
    if (count > 0) {
      const double mean = sum / count;
      for (int i = 0; i < n_p; ++i)
        if (system.pressure_diag[i] == 0.0) rhs[n_u + i] -= mean;
    }
  }

  const auto result = fgmres(
      [&system](const Vector& x, Vector& y) { y = system.apply(x); },
      [&precondition](const Vector& x, Vector& y) { precondition.apply(x, y); }, rhs,
      rel_tol, config.restart, config.max_iterations);

  NewtonStepResult step;
  step.du = result.x.head(n_u);
  step.dp = result.x.tail(n_p);
  step.fgmres_iterations = result.iterations;
  update_constraints.distribute(step.du, step.dp);

  // mean-zero pressure gauge
  const double volume = system.pressure_integral.sum();
  const double mean = system.pressure_integral.dot(step.dp) / volume;
  step.dp.array() -= mean;

  if (logger) {
    std::ostringstream line;
    line << "linear_solve fgmres_iterations=" << step.fgmres_iterations
         << " rel_tol=" << rel_tol;
    logger.line(line.str());
  }
  return step;
}

NewtonStepResult solve_newton_step(const BlockSystem& system, const ModelParams& params,
                                   const ConstraintSet& update_constraints,
                                   double rel_tol) {
  const BlockPreconditioner precondition(system, params);
  return solve_newton_step(system, precondition, update_constraints, rel_tol);
}

}  // namespace dbf
