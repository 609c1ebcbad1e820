#include "dbf/amr.hpp"

#include "dbf/elements.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dbf {

namespace {

// velocity gradient of one component pair at a reference point of a cell
Mat2 velocity_gradient_on_cell(const Mesh& mesh, const DofHandler& dofs,
                               const Vector& u, int cell_id, const Vec2& xi) {
  const auto& q2 = ReferenceElement::q2();
  const double inv_h = 1.0 / mesh.cell_size(cell_id);
  const auto& nodes = dofs.cell_unodes(cell_id);
  Mat2 g = Mat2::Zero();
  for (int a = 0; a < 9; ++a) {
    const Vec2 grad = q2.shape_gradient(a, xi) * inv_h;
    for (int c = 0; c < 2; ++c) {
      g(c, 0) += u[2 * nodes[a] + c] * grad[0];
      g(c, 1) += u[2 * nodes[a] + c] * grad[1];
    }
  }
  return g;
}

Vec2 face_point(const Mesh& mesh, int cell_id, int face, double t) {
  const double h = mesh.cell_size(cell_id);
  const Vec2 origin = mesh.cell_corners(cell_id)[0];
  switch (face) {
    case 0: return origin + Vec2(t * h, 0);
    case 1: return origin + Vec2(h, t * h);
    case 2: return origin + Vec2(t * h, h);
    default: return origin + Vec2(0, t * h);
  }
}

Vec2 face_normal(int face) {
  switch (face) {
    case 0: return Vec2(0, -1);
    case 1: return Vec2(1, 0);
    case 2: return Vec2(0, 1);
    default: return Vec2(-1, 0);
  }
}

// integral of the squared normal-derivative jump over a straight segment
// between `cell_id` and `neighbor_id`, parameterized by t in [t0, t1] of
// our face; `length` is the segment length
double face_jump_integral(const Mesh& mesh, const DofHandler& dofs, const Vector& u,
                          int cell_id, int neighbor_id, int face, double t0, double t1,
                          double length) {
  const auto rule = gauss_rule_1d(3);
  const Vec2 normal = face_normal(face);
  const double nb_h = mesh.cell_size(neighbor_id);
  const Vec2 nb_origin = mesh.cell_corners(neighbor_id)[0];

  double integral = 0.0;
  for (size_t q = 0; q < rule.points.size(); ++q) {
    const double t = t0 + (t1 - t0) * rule.points[q];
    const Vec2 x = face_point(mesh, cell_id, face, t);
    const double h = mesh.cell_size(cell_id);
    const Vec2 xi_here = (x - mesh.cell_corners(cell_id)[0]) / h;
    const Vec2 xi_there = (x - nb_origin) / nb_h;
    const Mat2 g_here = velocity_gradient_on_cell(mesh, dofs, u, cell_id, xi_here);
    const Mat2 g_there = velocity_gradient_on_cell(mesh, dofs, u, neighbor_id, xi_there);
    const Vec2 jump = (g_here - g_there) * normal;
    integral += jump.squaredNorm() * rule.weights[q] * length;
  }
  return integral;
}

}  // namespace

IndicatorField kelly_indicator(const Mesh& mesh, const DofHandler& dofs,
                               const SolutionState& state) {
  IndicatorField eta(mesh.n_active(), 0.0);
  int pos = 0;
  for (int cell_id : mesh.active_cells()) {
    double eta_sq = 0.0;
    const double h = mesh.cell_size(cell_id);
    for (int face = 0; face < 4; ++face) {
      const FaceNeighbor nb = mesh.neighbor(cell_id, face);
      switch (nb.kind) {
        case FaceNeighbor::Kind::boundary:
          break;
        case FaceNeighbor::Kind::same:
        case FaceNeighbor::Kind::coarser:
          eta_sq += (h / 24.0) *
                    face_jump_integral(mesh, dofs, state.u, cell_id, nb.id, face, 0.0,
                                       1.0, h);
          break;
        case FaceNeighbor::Kind::finer: {
          const double h_sub = 0.5 * h;
          eta_sq += (h_sub / 24.0) * face_jump_integral(mesh, dofs, state.u, cell_id,
                                                        nb.id, face, 0.0, 0.5, h_sub);
          eta_sq += (h_sub / 24.0) *
                    face_jump_integral(mesh, dofs, state.u, cell_id, nb.second_id, face,
                                       0.5, 1.0, h_sub);
          break;
        }
      }
    }
    eta[pos++] = std::sqrt(eta_sq);
  }
  return eta;
}

std::pair<std::vector<int>, std::vector<int>> mark_cells(const Mesh& mesh,
                                                         const IndicatorField& indicators,
                                                         double refine_fraction,
                                                         double coarsen_fraction) {
  const int n = mesh.n_active();
  if (static_cast<int>(indicators.size()) != n)
    throw std::invalid_argument("mark_cells: indicator size mismatch");
  for (double v : indicators)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("mark_cells: indicators must be finite and nonnegative");

  const int n_refine = static_cast<int>(std::ceil(refine_fraction * n));
  const int n_coarsen = static_cast<int>(std::floor(coarsen_fraction * n));

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& active = mesh.active_cells();

  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (indicators[a] != indicators[b]) return indicators[a] > indicators[b];
    return active[a] < active[b];
  });
  std::vector<int> refine;
  std::vector<char> in_refine(n, 0);
  for (int k = 0; k < n_refine && k < n; ++k) {
    refine.push_back(active[order[k]]);
    in_refine[order[k]] = 1;
  }

  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (indicators[a] != indicators[b]) return indicators[a] < indicators[b];
    return active[a] < active[b];
  });
  std::vector<int> coarsen;
  for (int k = 0; k < n && static_cast<int>(coarsen.size()) < n_coarsen; ++k)
    if (!in_refine[order[k]]) coarsen.push_back(active[order[k]]);

  std::sort(refine.begin(), refine.end());
  std::sort(coarsen.begin(), coarsen.end());
  return {refine, coarsen};
}

SolutionState transfer_solution(const Mesh& old_mesh, const DofHandler& old_dofs,
                                const SolutionState& state, const Mesh& new_mesh,
                                const DofHandler& new_dofs,
                                const ConstraintSet& new_constraints) {
  if (new_mesh.parent_mesh_id() != old_mesh.mesh_id())
    throw std::invalid_argument("transfer_solution: mesh lineage mismatch");

  SolutionState out = SolutionState::zero(new_dofs);
  for (int node = 0; node < new_dofs.n_velocity_nodes(); ++node) {
    const Vec2 v = evaluate_velocity(old_mesh, old_dofs, state.u,
                                     new_dofs.velocity_node(node));
    out.u[2 * node] = v[0];
    out.u[2 * node + 1] = v[1];
  }
  for (int node = 0; node < new_dofs.n_pressure_dofs(); ++node)
    out.p[node] =
        evaluate_pressure(old_mesh, old_dofs, state.p, new_dofs.pressure_node(node));

  new_constraints.distribute(out.u, out.p);
  return out;
}

AmrResult amr_loop(const ProblemSpec& problem, const ModelParams& params,
                   const AmrConfig& config, Logger logger, const CycleObserver& observer) {
  params.validate();
  AmrResult result;
  result.mesh = std::make_unique<Mesh>(Mesh::build_unit_square(config.n_global_refines));
  result.dofs = std::make_unique<DofHandler>(*result.mesh);

  auto build_constraints = [&problem](const Mesh& mesh, const DofHandler& dofs) {
    auto bc = [&problem](BoundaryMarker marker, const Vec2& x) {
      return problem.boundary_velocity(marker, x);
    };
    return hanging_node_constraints(mesh, dofs).merged(dirichlet_constraints(dofs, bc));
  };
  result.constraints = build_constraints(*result.mesh, *result.dofs);

  auto record_cycle = [&](int cycle, const NewtonReport& report) {
    CycleReport cr;
    cr.cycle = cycle;
    cr.active_cells = result.mesh->n_active();
    cr.dofs = result.dofs->n_total_dofs();
    cr.newton = report;
    result.cycles.push_back(cr);
    if (logger) {
      std::ostringstream line;
      line << "cycle " << cycle << " cells=" << cr.active_cells << " dofs=" << cr.dofs
           << " newton=" << report.iterations << " fgmres_total=" << report.fgmres_total()
           << " converged=" << report.converged;
      logger.line(line.str());
    }
    if (observer) observer(cr, *result.mesh, *result.dofs, result.state);
  };

  try {
    result.state = initial_guess(problem, *result.mesh, *result.dofs, result.constraints,
                                 params, config.newton, logger);
  } catch (const ConvergenceError& err) {
    NewtonReport failed;
    failed.failure_reason = err.what();
    result.state = SolutionState::zero(*result.dofs);
    result.constraints.distribute(result.state.u, result.state.p);
    record_cycle(0, failed);
    result.converged = false;
    return result;
  }

  NewtonReport report = newton_solve(problem, *result.mesh, *result.dofs,
                                     result.constraints, params, result.state,
                                     config.newton, logger, 0);
  record_cycle(0, report);
  if (!report.converged) {
    result.converged = false;
    return result;
  }

  for (int cycle = 1; cycle <= config.max_cycles; ++cycle) {
    const IndicatorField eta = kelly_indicator(*result.mesh, *result.dofs, result.state);
    const auto [refine, coarsen] =
        mark_cells(*result.mesh, eta, config.refine_fraction, config.coarsen_fraction);

    auto new_mesh =
        std::make_unique<Mesh>(refine_and_coarsen(*result.mesh, refine, coarsen));
    auto new_dofs = std::make_unique<DofHandler>(*new_mesh);
    ConstraintSet new_constraints = build_constraints(*new_mesh, *new_dofs);
    result.state = transfer_solution(*result.mesh, *result.dofs, result.state, *new_mesh,
                                     *new_dofs, new_constraints);
    result.mesh = std::move(new_mesh);
    result.dofs = std::move(new_dofs);
    result.constraints = std::move(new_constraints);

    report = newton_solve(problem, *result.mesh, *result.dofs, result.constraints, params,
                          result.state, config.newton, logger, cycle);
    record_cycle(cycle, report);
    if (!report.converged) {
      result.converged = false;
      return result;
    }
  }
  result.converged = true;
  return result;
}

}  // namespace dbf
