#include "dbf/assembly.hpp"

#include "dbf/elements.hpp"

#include <cmath>
#include <stdexcept>

namespace dbf {

namespace {

constexpr double kForchheimerFloor = 1e-12;

// Reference-element values at the default 3x3 Gauss points.
struct QuadTables {
  QuadratureRule rule;
  // [qp][basis]
  std::vector<std::array<double, 9>> uval;
  std::vector<std::array<Vec2, 9>> ugrad;
  std::vector<std::array<double, 4>> pval;

  QuadTables() : rule(gauss_rule(3)) {
    const auto& q2 = ReferenceElement::q2();
    const auto& q1 = ReferenceElement::q1();
    const int nq = rule.size();
    uval.resize(nq);
    ugrad.resize(nq);
    pval.resize(nq);
    for (int q = 0; q < nq; ++q) {
      for (int a = 0; a < 9; ++a) {
        uval[q][a] = q2.shape_value(a, rule.points[q]);
        ugrad[q][a] = q2.shape_gradient(a, rule.points[q]);
      }
      for (int b = 0; b < 4; ++b) pval[q][b] = q1.shape_value(b, rule.points[q]);
    }
  }
};

const QuadTables& quad_tables() {
  static const QuadTables tables;
  return tables;
}

void check_state(const DofHandler& dofs, const SolutionState& state) {
  if (state.u.size() != dofs.n_velocity_dofs() || state.p.size() != dofs.n_pressure_dofs())
    throw std::invalid_argument("assembly: state size does not match the DofHandler");
  if (!state.u.allFinite() || !state.p.allFinite())
    throw std::invalid_argument("assembly: state contains NaN or Inf");
}

// row targets of a global dof under the constraint expansion
inline void expand_dof(const ConstraintSet& constraints, int dof,
                       std::vector<std::pair<int, double>>& targets) {
  targets.clear();
  if (!constraints.is_constrained(dof)) {
    targets.emplace_back(dof, 1.0);
    return;
  }
  for (const auto& mw : constraints.line(dof).masters) targets.push_back(mw);
}

struct CellKernelOutput {
  double a_local[18][18];
  double b_local[4][18];
  double mp_local[4][4];
  double rhs_u[18];
  double rhs_p[4];
  double p_integral[4];
};

// Integrates all forms of one Newton step over a single cell.
void cell_kernel(const Mesh& mesh, const DofHandler& dofs, const SolutionState& state,
                 const ModelParams& params, const ForcingFunction& forcing, int cell_id,
                 bool with_matrix, CellKernelOutput& out) {
  const auto& tables = quad_tables();
  const double h = mesh.cell_size(cell_id);
  const double inv_h = 1.0 / h;
  const double det_j = h * h;
  const Vec2 origin = mesh.cell_corners(cell_id)[0];

  const auto& unodes = dofs.cell_unodes(cell_id);
  const auto& pnodes = dofs.cell_pnodes(cell_id);
  double su[18];
  double sp[4];
  for (int a = 0; a < 9; ++a)
    for (int c = 0; c < 2; ++c) su[2 * a + c] = state.u[2 * unodes[a] + c];
  for (int b = 0; b < 4; ++b) sp[b] = state.p[pnodes[b]];

  std::fill(&out.a_local[0][0], &out.a_local[0][0] + 18 * 18, 0.0);
  std::fill(&out.b_local[0][0], &out.b_local[0][0] + 4 * 18, 0.0);
  std::fill(&out.mp_local[0][0], &out.mp_local[0][0] + 4 * 4, 0.0);
  std::fill(out.rhs_u, out.rhs_u + 18, 0.0);
  std::fill(out.rhs_p, out.rhs_p + 4, 0.0);
  std::fill(out.p_integral, out.p_integral + 4, 0.0);

  const double nu = params.viscous_coefficient();
  const double drag = params.darcy_coefficient();
  const double forch = params.forchheimer_coefficient();
  const bool convection = params.has_convection();
  const double gamma = params.gamma;

  for (int q = 0; q < tables.rule.size(); ++q) {
    const double jxw = tables.rule.weights[q] * det_j;
    const auto& val = tables.uval[q];
    const auto& ref_grad = tables.ugrad[q];
    const auto& pv = tables.pval[q];

    Vec2 grad[9];
    for (int a = 0; a < 9; ++a) grad[a] = ref_grad[a] * inv_h;

    // state at this quadrature point
    Vec2 u_val = Vec2::Zero();
    Mat2 grad_u = Mat2::Zero();  // grad_u(c, d) = d u_c / d x_d
    double p_val = 0.0;
    for (int a = 0; a < 9; ++a) {
      for (int c = 0; c < 2; ++c) {
        u_val[c] += su[2 * a + c] * val[a];
        grad_u(c, 0) += su[2 * a + c] * grad[a][0];
        grad_u(c, 1) += su[2 * a + c] * grad[a][1];
      }
    }
    for (int b = 0; b < 4; ++b) p_val += sp[b] * pv[b];
    const double div_u = grad_u(0, 0) + grad_u(1, 1);
    const double u_norm = u_val.norm();

    if (with_matrix) {
      for (int ai = 0; ai < 9; ++ai)
        for (int aj = 0; aj < 9; ++aj) {
          const double phi = val[ai] * val[aj];
          // blocks diagonal in the component
          double same = nu * grad[ai].dot(grad[aj]) + drag * phi;
          if (convection) same += u_val.dot(grad[aj]) * val[ai];
          if (forch != 0.0) same += forch * u_norm * phi;
          for (int ci = 0; ci < 2; ++ci)
            for (int cj = 0; cj < 2; ++cj) {
              double entry = (ci == cj) ? same : 0.0;
              if (convection) entry += val[aj] * grad_u(ci, cj) * val[ai];
              if (forch != 0.0 && u_norm >= kForchheimerFloor)
                entry += forch * (u_val[ci] * u_val[cj] / u_norm) * phi;
              entry += gamma * grad[ai][ci] * grad[aj][cj];
              out.a_local[2 * ai + ci][2 * aj + cj] += entry * jxw;
            }
        }

      for (int bi = 0; bi < 4; ++bi)
        for (int aj = 0; aj < 9; ++aj)
          for (int cj = 0; cj < 2; ++cj)
            out.b_local[bi][2 * aj + cj] -= pv[bi] * grad[aj][cj] * jxw;

      for (int bi = 0; bi < 4; ++bi)
        for (int bj = 0; bj < 4; ++bj) out.mp_local[bi][bj] += pv[bi] * pv[bj] * jxw;
    }

    Vec2 f = Vec2::Zero();
    if (forcing) f = forcing(Vec2(origin + h * tables.rule.points[q]));
    const Vec2 conv_u = convection ? Vec2(grad_u * u_val) : Vec2(Vec2::Zero());
    for (int ai = 0; ai < 9; ++ai)
      for (int ci = 0; ci < 2; ++ci) {
        double r = -conv_u[ci] * val[ai];
        r += p_val * grad[ai][ci];
        r -= nu * (grad_u(ci, 0) * grad[ai][0] + grad_u(ci, 1) * grad[ai][1]);
        r -= drag * u_val[ci] * val[ai];
        if (forch != 0.0) r -= forch * u_norm * u_val[ci] * val[ai];
        r -= gamma * div_u * grad[ai][ci];
        r += f[ci] * val[ai];
        out.rhs_u[2 * ai + ci] += r * jxw;
      }
    for (int bi = 0; bi < 4; ++bi) {
      out.rhs_p[bi] += pv[bi] * div_u * jxw;
      out.p_integral[bi] += pv[bi] * jxw;
    }
  }
}

std::vector<int> expanded_targets(const ConstraintSet& constraints,
                                  const std::vector<int>& dofs_list, int offset) {
  std::vector<int> out;
  out.reserve(dofs_list.size());
  for (int dof : dofs_list) {
    if (constraints.is_constrained(dof)) {
      for (const auto& [m, w] : constraints.line(dof).masters) {
        (void)w;
        out.push_back(m - offset);
      }
    } else {
      out.push_back(dof - offset);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void build_cache(const Mesh& mesh, const DofHandler& dofs,
                 const ConstraintSet& constraints, AssemblyCache& cache) {
  const int n_u = dofs.n_velocity_dofs();
  const int n_p = dofs.n_pressure_dofs();
  SparsityPattern pat_a(n_u, n_u), pat_b(n_p, n_u), pat_mp(n_p, n_p);

  for (int cell_id : mesh.active_cells()) {
    const auto vd = dofs.cell_velocity_dofs(cell_id);
    const auto pd = dofs.cell_pressure_dofs(cell_id);
    const auto vel = expanded_targets(constraints, {vd.begin(), vd.end()}, 0);
    const auto pres = expanded_targets(constraints, {pd.begin(), pd.end()}, n_u);
    pat_a.add_block(vel, vel);
    pat_b.add_block(pres, vel);
    pat_mp.add_block(pres, pres);
  }
  for (const auto& [dof, line] : constraints.lines()) {
    (void)line;
    if (dof < n_u)
      pat_a.add(dof, dof);
    else
      pat_mp.add(dof - n_u, dof - n_u);
  }
  cache.a_skeleton = pat_a.freeze();
  cache.b_skeleton = pat_b.freeze();
  cache.mp_skeleton = pat_mp.freeze();
  cache.valid = true;
}

}  // namespace

void ModelParams::validate() const {
  if (!(re > 0.0)) throw std::invalid_argument("ModelParams: re must be positive");
  if (!(da > 0.0) && has_darcy_drag())
    throw std::invalid_argument("ModelParams: da must be positive");
  if (c_f < 0.0) throw std::invalid_argument("ModelParams: c_f must be nonnegative");
  if (gamma < 0.0) throw std::invalid_argument("ModelParams: gamma must be nonnegative");
}

SolutionState SolutionState::zero(const DofHandler& dofs) {
  SolutionState s;
  s.u = Vector::Zero(dofs.n_velocity_dofs());
  s.p = Vector::Zero(dofs.n_pressure_dofs());
  return s;
}

Vector BlockSystem::apply(const Vector& x) const {
  const int nu = n_u(), np = n_p();
  const Vector xu = x.head(nu), xp = x.tail(np);
  Vector y(nu + np);
  y.head(nu) = a_gamma.multiply(xu) + b.multiply_transpose(xp);
  y.tail(np) = b.multiply(xu) + pressure_diag.cwiseProduct(xp);
  return y;
}

void distribute_local_to_global(const ConstraintSet& constraints,
                                const std::vector<int>& row_dofs,
                                const std::vector<int>& col_dofs, const double* local,
                                CsrMatrix& matrix, Vector* rhs, int row_offset,
                                int col_offset) {
  const int n_rows = static_cast<int>(row_dofs.size());
  const int n_cols = static_cast<int>(col_dofs.size());
  std::vector<std::pair<int, double>> row_t, col_t;
  for (int i = 0; i < n_rows; ++i) {
    expand_dof(constraints, row_dofs[i], row_t);
    for (int j = 0; j < n_cols; ++j) {
      const double value = local[i * n_cols + j];
      if (value == 0.0) continue;
      expand_dof(constraints, col_dofs[j], col_t);
      const double inhom = constraints.is_constrained(col_dofs[j])
                               ? constraints.line(col_dofs[j]).inhomogeneity
                               : 0.0;
      for (const auto& [r, wr] : row_t) {
        for (const auto& [c, wc] : col_t)
          matrix.add(r - row_offset, c - col_offset, wr * wc * value);
        if (rhs && inhom != 0.0) (*rhs)[r - row_offset] -= wr * value * inhom;
      }
    }
  }
}

BlockSystem assemble_newton_system(const Mesh& mesh, const DofHandler& dofs,
                                   const ConstraintSet& constraints,
                                   const SolutionState& state, const ModelParams& params,
                                   const ForcingFunction& forcing, AssemblyCache* cache) {
  params.validate();
  check_state(dofs, state);
  if (!constraints.closed())
    throw std::invalid_argument("assemble_newton_system: constraints not closed");

  AssemblyCache local_cache;
  AssemblyCache& c = cache ? *cache : local_cache;
  if (!c.valid) build_cache(mesh, dofs, constraints, c);

  const int n_u = dofs.n_velocity_dofs();
  const int n_p = dofs.n_pressure_dofs();

  BlockSystem system;
  system.a_gamma = c.a_skeleton;
  system.b = c.b_skeleton;
  system.m_p = c.mp_skeleton;
  system.rhs_u = Vector::Zero(n_u);
  system.rhs_p = Vector::Zero(n_p);
  system.pressure_diag = Vector::Zero(n_p);
  system.pressure_integral = Vector::Zero(n_p);

  CellKernelOutput out;
  std::vector<int> vrows(18), prows(4);
  std::vector<std::pair<int, double>> row_t;
  for (int cell_id : mesh.active_cells()) {
    cell_kernel(mesh, dofs, state, params, forcing, cell_id, true, out);
    const auto vd = dofs.cell_velocity_dofs(cell_id);
    const auto pd = dofs.cell_pressure_dofs(cell_id);
    vrows.assign(vd.begin(), vd.end());
    prows.assign(pd.begin(), pd.end());

    distribute_local_to_global(constraints, vrows, vrows, &out.a_local[0][0],
                               system.a_gamma, &system.rhs_u, 0, 0);
    distribute_local_to_global(constraints, prows, vrows, &out.b_local[0][0], system.b,
                               &system.rhs_p, n_u, 0);
    distribute_local_to_global(constraints, prows, prows, &out.mp_local[0][0],
                               system.m_p, nullptr, n_u, n_u);

    for (int i = 0; i < 18; ++i) {
      expand_dof(constraints, vrows[i], row_t);
      for (const auto& [r, w] : row_t) system.rhs_u[r] += w * out.rhs_u[i];
    }
    for (int i = 0; i < 4; ++i) {
      expand_dof(constraints, prows[i], row_t);
      for (const auto& [r, w] : row_t) system.rhs_p[r - n_u] += w * out.rhs_p[i];
      system.pressure_integral[prows[i] - n_u] += out.p_integral[i];
    }
  }

  // positive diagonal on eliminated rows keeps the blocks invertible
  double a_diag_sum = 0.0, mp_diag_sum = 0.0;
  int a_count = 0, mp_count = 0;
  for (int i = 0; i < n_u; ++i)
    if (!constraints.is_constrained(i)) {
      a_diag_sum += std::abs(system.a_gamma(i, i));
      ++a_count;
    }
  for (int i = 0; i < n_p; ++i)
    if (!constraints.is_constrained(n_u + i)) {
      mp_diag_sum += std::abs(system.m_p(i, i));
      ++mp_count;
    }
  const double a_scale = a_count ? a_diag_sum / a_count : 1.0;
  const double mp_scale = mp_count ? mp_diag_sum / mp_count : 1.0;
  for (const auto& [dof, line] : constraints.lines()) {
    if (dof < n_u) {
      system.a_gamma.add(dof, dof, a_scale);
      system.rhs_u[dof] = a_scale * line.inhomogeneity;
    } else {
      system.m_p.add(dof - n_u, dof - n_u, mp_scale);
      system.pressure_diag[dof - n_u] = mp_scale;
      system.rhs_p[dof - n_u] = mp_scale * line.inhomogeneity;
    }
  }
  return system;
}

ResidualResult assemble_residual(const Mesh& mesh, const DofHandler& dofs,
                                 const ConstraintSet& constraints,
                                 const SolutionState& state, const ModelParams& params,
                                 const ForcingFunction& forcing) {
  params.validate();
  check_state(dofs, state);
  if (!constraints.closed())
    throw std::invalid_argument("assemble_residual: constraints not closed");
  const int n_u = dofs.n_velocity_dofs();
  const int n_p = dofs.n_pressure_dofs();

  ResidualResult result;
  result.residual = Vector::Zero(n_u + n_p);

  CellKernelOutput out;
  std::vector<std::pair<int, double>> row_t;
  for (int cell_id : mesh.active_cells()) {
    cell_kernel(mesh, dofs, state, params, forcing, cell_id, false, out);
    const auto vd = dofs.cell_velocity_dofs(cell_id);
    const auto pd = dofs.cell_pressure_dofs(cell_id);
    for (int i = 0; i < 18; ++i) {
      expand_dof(constraints, vd[i], row_t);
      for (const auto& [r, w] : row_t) result.residual[r] += w * out.rhs_u[i];
    }
    for (int i = 0; i < 4; ++i) {
      expand_dof(constraints, pd[i], row_t);
      for (const auto& [r, w] : row_t) result.residual[r] += w * out.rhs_p[i];
    }
  }
  result.norm = result.residual.norm();
  return result;
}

double divergence_l2(const Mesh& mesh, const DofHandler& dofs, const SolutionState& state) {
  check_state(dofs, state);
  const auto& tables = quad_tables();
  double total = 0.0;
  for (int cell_id : mesh.active_cells()) {
    const double h = mesh.cell_size(cell_id);
    const double inv_h = 1.0 / h;
    const auto& unodes = dofs.cell_unodes(cell_id);
    for (int q = 0; q < tables.rule.size(); ++q) {
      double div_u = 0.0;
      for (int a = 0; a < 9; ++a) {
        const Vec2 g = tables.ugrad[q][a] * inv_h;
        div_u += state.u[2 * unodes[a]] * g[0] + state.u[2 * unodes[a] + 1] * g[1];
      }
      total += div_u * div_u * tables.rule.weights[q] * h * h;
    }
  }
  return std::sqrt(total);
}

}  // namespace dbf
