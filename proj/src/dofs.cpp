#include "dbf/dofs.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace dbf {

namespace {

constexpr int kScaleBits = 26;
constexpr std::int64_t kScale = std::int64_t{1} << kScaleBits;

std::uint64_t node_key(std::int64_t x, std::int64_t y) {
  return (static_cast<std::uint64_t>(x) << 27) | static_cast<std::uint64_t>(y);
}

unsigned boundary_bits(std::int64_t x, std::int64_t y) {
  unsigned mask = 0;
  if (y == 0) mask |= 1u << static_cast<int>(BoundaryMarker::bottom);
  if (x == kScale) mask |= 1u << static_cast<int>(BoundaryMarker::right);
  if (y == kScale) mask |= 1u << static_cast<int>(BoundaryMarker::top);
  if (x == 0) mask |= 1u << static_cast<int>(BoundaryMarker::left);
  return mask;
}

// 1D quadratic Lagrange basis at nodes {0, 1/2, 1}
double quad_lagrange(int k, double t) {
  switch (k) {
    case 0: return (2.0 * t - 1.0) * (t - 1.0);
    case 1: return 4.0 * t * (1.0 - t);
    default: return t * (2.0 * t - 1.0);
  }
}

}  // namespace

void ConstraintSet::add_line(int dof, Line line) {
  auto [it, inserted] = lines_.try_emplace(dof, std::move(line));
  (void)it;
  closed_ = false;
  if (!inserted) return;  // duplicate hanging entries from the twin subface
}

void ConstraintSet::close() {
  for (int pass = 0; pass < 64; ++pass) {
    bool changed = false;
    for (auto& [dof, line] : lines_) {
      std::vector<std::pair<int, double>> expanded;
      expanded.reserve(line.masters.size());
      for (const auto& [master, weight] : line.masters) {
        auto it = lines_.find(master);
        if (it == lines_.end()) {
          expanded.emplace_back(master, weight);
        } else {
          changed = true;
          line.inhomogeneity += weight * it->second.inhomogeneity;
          for (const auto& [mm, ww] : it->second.masters)
            expanded.emplace_back(mm, weight * ww);
        }
      }
      std::sort(expanded.begin(), expanded.end());
      std::vector<std::pair<int, double>> merged;
      for (const auto& e : expanded) {
        if (!merged.empty() && merged.back().first == e.first)
          merged.back().second += e.second;
        else
          merged.push_back(e);
      }
      line.masters = std::move(merged);
    }
    if (!changed) {
      closed_ = true;
      return;
    }
  }
  throw std::logic_error("ConstraintSet::close: constraint chain did not resolve");
}

ConstraintSet ConstraintSet::merged(const ConstraintSet& other) const {
  ConstraintSet out = *this;
  for (const auto& [dof, line] : other.lines_) {
    if (out.lines_.count(dof))
      throw std::logic_error("ConstraintSet::merged: conflicting constraint");
    out.lines_.emplace(dof, line);
  }
  out.closed_ = false;
  out.close();
  return out;
}

ConstraintSet ConstraintSet::homogeneous() const {
  ConstraintSet out = *this;
  for (auto& [dof, line] : out.lines_) {
    (void)dof;
    line.inhomogeneity = 0.0;
  }
  out.closed_ = closed_;
  return out;
}

void ConstraintSet::distribute(Vector& u, Vector& p) const {
  const int n_u = static_cast<int>(u.size());
  auto value_of = [&](int dof) { return dof < n_u ? u[dof] : p[dof - n_u]; };
  for (const auto& [dof, line] : lines_) {
    double v = line.inhomogeneity;
    for (const auto& [master, weight] : line.masters) v += weight * value_of(master);
    if (dof < n_u)
      u[dof] = v;
    else
      p[dof - n_u] = v;
  }
}

DofHandler::DofHandler(const Mesh& mesh) : mesh_(&mesh) {
  std::unordered_map<std::uint64_t, int> umap, pmap;
  active_pos_.assign(mesh.n_cells(), -1);
  cell_unodes_.reserve(mesh.n_active());
  cell_pnodes_.reserve(mesh.n_active());

  int pos = 0;
  for (int cell_id : mesh.active_cells()) {
    active_pos_[cell_id] = pos++;
    const Cell& c = mesh.cell(cell_id);
    const int shift_u = kScaleBits - c.level - 1;  // Q2 lattice spacing h/2
    const int shift_p = kScaleBits - c.level;

    std::array<int, 9> un;
    for (int a = 0; a < 9; ++a) {
      const std::int64_t x = (2 * c.ix + a % 3) << shift_u;
      const std::int64_t y = (2 * c.iy + a / 3) << shift_u;
      auto [it, inserted] = umap.try_emplace(node_key(x, y), n_unodes_);
      if (inserted) {
        ++n_unodes_;
        unode_coords_.emplace_back(std::ldexp(static_cast<double>(x), -kScaleBits),
                                   std::ldexp(static_cast<double>(y), -kScaleBits));
        unode_boundary_.push_back(static_cast<unsigned char>(boundary_bits(x, y)));
      }
      un[a] = it->second;
    }
    cell_unodes_.push_back(un);

    std::array<int, 4> pn;
    for (int b = 0; b < 4; ++b) {
      const std::int64_t x = (c.ix + b % 2) << shift_p;
      const std::int64_t y = (c.iy + b / 2) << shift_p;
      auto [it, inserted] = pmap.try_emplace(node_key(x, y), n_pnodes_);
      if (inserted) {
        ++n_pnodes_;
        pnode_coords_.emplace_back(std::ldexp(static_cast<double>(x), -kScaleBits),
                                   std::ldexp(static_cast<double>(y), -kScaleBits));
      }
      pn[b] = it->second;
    }
    cell_pnodes_.push_back(pn);
  }
}

const std::array<int, 9>& DofHandler::cell_unodes(int cell_id) const {
  return cell_unodes_[active_pos_.at(cell_id)];
}

const std::array<int, 4>& DofHandler::cell_pnodes(int cell_id) const {
  return cell_pnodes_[active_pos_.at(cell_id)];
}

std::array<int, 18> DofHandler::cell_velocity_dofs(int cell_id) const {
  const auto& nodes = cell_unodes(cell_id);
  std::array<int, 18> dofs;
  for (int a = 0; a < 9; ++a)
    for (int c = 0; c < 2; ++c) dofs[2 * a + c] = 2 * nodes[a] + c;
  return dofs;
}

std::array<int, 4> DofHandler::cell_pressure_dofs(int cell_id) const {
  const auto& nodes = cell_pnodes(cell_id);
  std::array<int, 4> dofs;
  for (int b = 0; b < 4; ++b) dofs[b] = n_velocity_dofs() + nodes[b];
  return dofs;
}

std::vector<int> DofHandler::boundary_velocity_nodes(BoundaryMarker marker) const {
  std::vector<int> nodes;
  const unsigned bit = 1u << static_cast<int>(marker);
  for (int n = 0; n < n_unodes_; ++n)
    if (unode_boundary_[n] & bit) nodes.push_back(n);
  return nodes;
}

DofHandler distribute_dofs(const Mesh& mesh) { return DofHandler(mesh); }

ConstraintSet hanging_node_constraints(const Mesh& mesh, const DofHandler& dofs) {
  ConstraintSet constraints;
  const int n_u = dofs.n_velocity_dofs();

  for (int cell_id : mesh.active_cells()) {
    for (int face = 0; face < 4; ++face) {
      const FaceNeighbor nb = mesh.neighbor(cell_id, face);
      if (nb.kind != FaceNeighbor::Kind::coarser) continue;

      // Coarse-edge scalar Q2 masters in ascending coordinate order along
      // the shared edge, and the matching Q1 corner masters.
      const auto& coarse_un = dofs.cell_unodes(nb.id);
      const auto& coarse_pn = dofs.cell_pnodes(nb.id);
      // our face -> the coarse cell's opposite face, as Q2 lattice indices
      // (x fastest): bottom face of ours = top edge of coarse, etc.
      static constexpr int kEdgeU[4][3] = {
          {6, 7, 8},  // our bottom: coarse top edge
          {0, 3, 6},  // our right: coarse left edge
          {0, 1, 2},  // our top: coarse bottom edge
          {2, 5, 8},  // our left: coarse right edge
      };
      static constexpr int kEdgeP[4][2] = {{2, 3}, {0, 2}, {0, 1}, {1, 3}};

      int mu[3], mp[2];
      for (int k = 0; k < 3; ++k) mu[k] = coarse_un[kEdgeU[face][k]];
      for (int k = 0; k < 2; ++k) mp[k] = coarse_pn[kEdgeP[face][k]];

      const auto& fine_un = dofs.cell_unodes(cell_id);
      const auto& fine_pn = dofs.cell_pnodes(cell_id);
      static constexpr int kFineEdgeU[4][3] = {
          {0, 1, 2}, {2, 5, 8}, {6, 7, 8}, {0, 3, 6}};
      static constexpr int kFineEdgeP[4][2] = {{0, 1}, {1, 3}, {2, 3}, {0, 2}};

      const int s = nb.subface;  // 0: lower-coordinate half of the coarse edge

      // Our mid-edge Q2 node sits at coarse-edge parameter s/2 + 1/4.
      {
        const double t = 0.5 * s + 0.25;
        const int fine_node = fine_un[kFineEdgeU[face][1]];
        for (int comp = 0; comp < 2; ++comp) {
          ConstraintSet::Line line;
          for (int k = 0; k < 3; ++k)
            line.masters.emplace_back(2 * mu[k] + comp, quad_lagrange(k, t));
          constraints.add_line(2 * fine_node + comp, std::move(line));
        }
      }

      // The hanging vertex at parameter 1/2 carries a constrained Q1
      // pressure DoF; its Q2 velocity node coincides with the coarse
      // edge midnode and is shared automatically.
      {
        const int fine_vertex = fine_pn[kFineEdgeP[face][s == 0 ? 1 : 0]];
        ConstraintSet::Line line;
        line.masters.emplace_back(n_u + mp[0], 0.5);
        line.masters.emplace_back(n_u + mp[1], 0.5);
        constraints.add_line(n_u + fine_vertex, std::move(line));
      }
    }
  }
  constraints.close();
  return constraints;
}

ConstraintSet dirichlet_constraints(
    const DofHandler& dofs,
    const std::function<Vec2(BoundaryMarker, const Vec2&)>& boundary_fn) {
  ConstraintSet constraints;
  for (int node = 0; node < dofs.n_velocity_nodes(); ++node) {
    const unsigned mask = dofs.boundary_mask(node);
    if (mask == 0) continue;
    // corner rule: the moving lid wins
    BoundaryMarker marker = BoundaryMarker::right;
    if (mask & (1u << static_cast<int>(BoundaryMarker::top)))
      marker = BoundaryMarker::top;
    else if (mask & (1u << static_cast<int>(BoundaryMarker::bottom)))
      marker = BoundaryMarker::bottom;
    else if (mask & (1u << static_cast<int>(BoundaryMarker::left)))
      marker = BoundaryMarker::left;
    const Vec2 g = boundary_fn(marker, dofs.velocity_node(node));
    for (int comp = 0; comp < 2; ++comp) {
      ConstraintSet::Line line;
      line.inhomogeneity = g[comp];
      constraints.add_line(2 * node + comp, std::move(line));
    }
  }
  constraints.close();
  return constraints;
}

}  // namespace dbf
