#pragma once

#include "dbf/dofs.hpp"
#include "dbf/mesh.hpp"
#include "dbf/sparse.hpp"
#include "dbf/types.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace dbf {

/// Sub-models of the momentum balance. The full model keeps the viscous
/// block, the Darcy drag, convection, and the quadratic Forchheimer drag;
/// the others switch terms off:
///   brinkman        drops convection and Forchheimer,
///   darcy_brinkman  drops Forchheimer only,
///   navier_stokes   drops the Darcy drag and Forchheimer (Da -> infinity).
enum class ModelVariant { brinkman, darcy_brinkman, dbf, navier_stokes };

struct ModelParams {
  double re = 1.0;
  double da = 1.0;
  double c_f = 0.5;
  double gamma = 1.0;
  ModelVariant variant = ModelVariant::dbf;

  bool has_convection() const { return variant != ModelVariant::brinkman; }
  bool has_darcy_drag() const { return variant != ModelVariant::navier_stokes; }
  bool has_forchheimer() const { return variant == ModelVariant::dbf; }
  bool is_linear() const { return variant == ModelVariant::brinkman; }

  double viscous_coefficient() const { return 1.0 / re; }
  double darcy_coefficient() const { return has_darcy_drag() ? 1.0 / (re * da) : 0.0; }
  double forchheimer_coefficient() const {
    return has_forchheimer() ? c_f / std::sqrt(da) : 0.0;
  }

  void validate() const;
};

/// One Newton step's linear system in block form. a_gamma collects the
/// viscous, drag, convection, Forchheimer, and grad-div blocks; b holds
/// -(psi_i, div phi_j). Constrained rows/columns are eliminated and their
/// diagonals carry a positive scaling; pressure_diag holds that scaling
/// for the (2,2) block which is otherwise zero.
struct BlockSystem {
  CsrMatrix a_gamma;  // n_u x n_u
  CsrMatrix b;        // n_p x n_u
  CsrMatrix m_p;      // n_p x n_p pressure mass
  Vector rhs_u, rhs_p;
  Vector pressure_diag;      // nonzero only at constrained pressure DoFs
  Vector pressure_integral;  // \int psi_i dx, the mean-zero gauge functional

  int n_u() const { return a_gamma.rows(); }
  int n_p() const { return b.rows(); }
  /// y = A_block x on the packed vector (u block, then p block)
  Vector apply(const Vector& x) const;
};

struct SolutionState {
  Vector u, p;
  double residual_norm = std::numeric_limits<double>::quiet_NaN();
  int newton_iterations = 0;

  static SolutionState zero(const DofHandler& dofs);
};

using ForcingFunction = std::function<Vec2(const Vec2&)>;

/// Reusable sparsity patterns for repeated assembly on one mesh.
struct AssemblyCache {
  bool valid = false;
  CsrMatrix a_skeleton, b_skeleton, mp_skeleton;
};

/// Assembles the Newton-step system linearized at `state`. `constraints`
/// is the closed, homogeneous update constraint set (hanging + Dirichlet).
/// The optional forcing is added to the momentum right-hand side.
BlockSystem assemble_newton_system(const Mesh& mesh, const DofHandler& dofs,
                                   const ConstraintSet& constraints,
                                   const SolutionState& state, const ModelParams& params,
                                   const ForcingFunction& forcing = {},
                                   AssemblyCache* cache = nullptr);

struct ResidualResult {
  Vector residual;  // packed (u block, then p block), constrained entries zero
  double norm = 0.0;
};

/// Weak-form residual of `state` tested against the constrained space;
/// its Euclidean norm is the Newton stopping quantity.
ResidualResult assemble_residual(const Mesh& mesh, const DofHandler& dofs,
                                 const ConstraintSet& constraints,
                                 const SolutionState& state, const ModelParams& params,
                                 const ForcingFunction& forcing = {});

/// || div u_h ||_{L2(Omega)}
double divergence_l2(const Mesh& mesh, const DofHandler& dofs, const SolutionState& state);

/// Local-to-global accumulation with constraint expansion: constrained
/// rows/columns are redirected to their masters, column inhomogeneities
/// move to the right-hand side. Row/column DoF indices are global; the
/// offsets map them into the block-local matrix indexing.
void distribute_local_to_global(const ConstraintSet& constraints,
                                const std::vector<int>& row_dofs,
                                const std::vector<int>& col_dofs, const double* local,
                                CsrMatrix& matrix, Vector* rhs, int row_offset,
                                int col_offset);

}  // namespace dbf
