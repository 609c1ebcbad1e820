#pragma once

#include "dbf/assembly.hpp"
#include "dbf/dofs.hpp"
#include "dbf/log.hpp"
#include "dbf/mesh.hpp"
#include "dbf/nonlinear.hpp"
#include "dbf/problems.hpp"

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace dbf {

/// One nonnegative indicator per active cell, ordered like active_cells().
using IndicatorField = std::vector<double>;

/// Jump-of-normal-derivative indicator per active cell,
///   eta_K^2 = sum_c sum_{F in dK} (h_F / 24) int_F [d_n u_c]^2 ds,
/// summed over both velocity components with 3-point Gauss per face;
/// boundary faces contribute nothing, nonconforming faces evaluate the
/// jump against the constrained coarse-side trace.
IndicatorField kelly_indicator(const Mesh& mesh, const DofHandler& dofs,
                               const SolutionState& state);

/// Fixed-fraction marking: the ceil(refine_fraction * n) cells of largest
/// indicator are flagged for refinement, the floor(coarsen_fraction * n)
/// smallest (excluding refine-flagged) for coarsening; ties break toward
/// the smaller cell id.
std::pair<std::vector<int>, std::vector<int>> mark_cells(
    const Mesh& mesh, const IndicatorField& indicators, double refine_fraction = 0.30,
    double coarsen_fraction = 0.03);

/// Interpolates the old finite element fields at the new node points
/// (exact on refined cells, nodal restriction on coarsened ones) and
/// re-applies the new mesh's constraints. The new mesh must come from
/// one refine_and_coarsen call on the old one.
SolutionState transfer_solution(const Mesh& old_mesh, const DofHandler& old_dofs,
                                const SolutionState& state, const Mesh& new_mesh,
                                const DofHandler& new_dofs,
                                const ConstraintSet& new_constraints);

struct AmrConfig {
  int n_global_refines = 5;
  int max_cycles = 4;
  double refine_fraction = 0.30;
  double coarsen_fraction = 0.03;
  NewtonConfig newton;
};

struct CycleReport {
  int cycle = 0;
  int active_cells = 0;
  int dofs = 0;
  NewtonReport newton;
};

struct AmrResult {
  std::unique_ptr<Mesh> mesh;
  std::unique_ptr<DofHandler> dofs;
  ConstraintSet constraints;
  SolutionState state;
  std::vector<CycleReport> cycles;
  bool converged = false;
};

using CycleObserver = std::function<void(const CycleReport&, const Mesh&,
                                         const DofHandler&, const SolutionState&)>;

/// Solve-estimate-mark-adapt loop: cycle 0 solves on the uniform mesh,
/// each further cycle adapts the mesh, transfers the previous solution,
/// and re-solves. A non-converged cycle ends the loop with converged
/// false; per-cycle statistics are reported either way.
AmrResult amr_loop(const ProblemSpec& problem, const ModelParams& params,
                   const AmrConfig& config = {}, Logger logger = {},
                   const CycleObserver& observer = {});

}  // namespace dbf
