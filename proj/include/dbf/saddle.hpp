#pragma once

#include "dbf/assembly.hpp"
#include "dbf/log.hpp"
#include "dbf/sparse.hpp"

namespace dbf {

struct SchurConfig {
  double mp_rel_tol = 1e-8;
  int mp_max_iterations = 1000;
};

struct FgmresConfig {
  int restart = 200;
  int max_iterations = 2000;
};

/// Block upper-triangular preconditioner for the saddle system
///   [ A_gamma  B^T ] [du]   [f]
///   [ B        0   ] [dp] = [g].
/// Application solves the pressure block first through the Schur
/// approximation S^-1 ~ -(nu + gamma) M_p^-1 (W = M_p), then back-
/// substitutes through an exact A_gamma solve:
///   z_p = -(nu + gamma) M_p^-1 r_p      (CG, Jacobi)
///   z_u = A_gamma^-1 (r_u - B^T z_p)    (multifrontal LU).
class BlockPreconditioner {
 public:
  BlockPreconditioner(const BlockSystem& system, const ModelParams& params,
                      SchurConfig config = {});

  void apply(const Vector& r_u, const Vector& r_p, Vector& z_u, Vector& z_p) const;
  /// packed-vector form used as the FGMRES right preconditioner
  void apply(const Vector& r, Vector& z) const;

  double nu() const { return nu_; }
  double gamma() const { return gamma_; }

 private:
  // self-contained: owns everything its application needs, so it stays
  // valid (and shareable) after the assembled system is gone
  CsrMatrix b_, m_p_;
  LuFactorization lu_a_gamma_;
  Vector mp_inv_diag_;
  double nu_, gamma_;
  SchurConfig config_;
};

struct NewtonStepResult {
  Vector du, dp;
  int fgmres_iterations = 0;
};

/// One Newton-step linear solve: FGMRES on the block operator, right-
/// preconditioned; the pressure right-hand side is projected onto the
/// mean-zero-compatible space, and the returned update is constraint-
/// distributed with the pressure gauge fixed by mean subtraction.
/// Throws ConvergenceError when the FGMRES budget is exhausted.
NewtonStepResult solve_newton_step(const BlockSystem& system,
                                   const BlockPreconditioner& precondition,
                                   const ConstraintSet& update_constraints,
                                   double rel_tol, const FgmresConfig& config = {},
                                   Logger logger = {});

/// Convenience form that builds the preconditioner in place.
NewtonStepResult solve_newton_step(const BlockSystem& system, const ModelParams& params,
                                   const ConstraintSet& update_constraints,
                                   double rel_tol);

}  // namespace dbf
