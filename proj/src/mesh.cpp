#include "dbf/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace dbf {

namespace {

// Coordinates are exact integers in 2^-26 units; Q2 nodes at half-cell
// spacing cap the refinement depth one level below the vertex scale.
constexpr int kMaxLevel = 25;
constexpr int kVertexScaleBits = 26;

std::uint64_t cell_key(int level, std::int64_t ix, std::int64_t iy) {
  return (static_cast<std::uint64_t>(level) << 54) |
         (static_cast<std::uint64_t>(ix) << 27) | static_cast<std::uint64_t>(iy);
}

std::uint64_t vertex_key(std::int64_t x, std::int64_t y) {
  return (static_cast<std::uint64_t>(x) << 27) | static_cast<std::uint64_t>(y);
}

std::uint64_t next_mesh_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

// face index -> step to the neighbor anchor
constexpr int kFaceDx[4] = {0, 1, 0, -1};
constexpr int kFaceDy[4] = {-1, 0, 1, 0};

// children of the same-level neighbor that touch our shared face,
// ordered by ascending coordinate along the face
constexpr int kFacingChildren[4][2] = {
    {2, 3},  // our bottom face: neighbor's NW, NE
    {0, 2},  // our right face: neighbor's SW, NW
    {0, 1},  // our top face: neighbor's SW, SE
    {1, 3},  // our left face: neighbor's SE, NE
};

}  // namespace

double cell_diameter(const Cell& cell) {
  return std::sqrt(2.0) * std::ldexp(1.0, -cell.level);
}

bool Mesh::is_active(int id) const {
  return id >= 0 && id < n_cells() && !dead_[id] && !cells_[id].has_children();
}

double Mesh::cell_size(int id) const { return std::ldexp(1.0, -cells_[id].level); }

std::array<Vec2, 4> Mesh::cell_corners(int id) const {
  const Cell& c = cells_[id];
  const double h = std::ldexp(1.0, -c.level);
  const double x0 = c.ix * h, y0 = c.iy * h;
  return {Vec2(x0, y0), Vec2(x0 + h, y0), Vec2(x0 + h, y0 + h), Vec2(x0, y0 + h)};
}

int Mesh::find_cell(int level, std::int64_t ix, std::int64_t iy) const {
  auto it = cell_lookup_.find(cell_key(level, ix, iy));
  return it == cell_lookup_.end() ? -1 : it->second;
}

int Mesh::get_or_create_vertex(int level, std::int64_t vx, std::int64_t vy) {
  const int shift = kVertexScaleBits - level;
  const std::int64_t x = vx << shift, y = vy << shift;
  auto [it, inserted] = vertex_lookup_.try_emplace(vertex_key(x, y), n_vertices());
  if (inserted)
    vertices_.emplace_back(std::ldexp(static_cast<double>(x), -kVertexScaleBits),
                           std::ldexp(static_cast<double>(y), -kVertexScaleBits));
  return it->second;
}

void Mesh::split(int cell_id) {
  const int level = cells_[cell_id].level;
  const std::int64_t ix = cells_[cell_id].ix, iy = cells_[cell_id].iy;
  if (level + 1 > kMaxLevel) throw std::length_error("Mesh: refinement level limit reached");

  for (int qy = 0; qy < 2; ++qy)
    for (int qx = 0; qx < 2; ++qx) {
      Cell child;
      child.id = n_cells();
      child.level = level + 1;
      child.parent = cell_id;
      child.ix = 2 * ix + qx;
      child.iy = 2 * iy + qy;
      child.vertices = {get_or_create_vertex(level + 1, child.ix, child.iy),
                        get_or_create_vertex(level + 1, child.ix + 1, child.iy),
                        get_or_create_vertex(level + 1, child.ix + 1, child.iy + 1),
                        get_or_create_vertex(level + 1, child.ix, child.iy + 1)};
      cells_[cell_id].children[qx + 2 * qy] = child.id;
      cell_lookup_.emplace(cell_key(child.level, child.ix, child.iy), child.id);
      cells_.push_back(child);
      dead_.push_back(0);
    }
}

void Mesh::merge(int parent_id) {
  Cell& p = cells_[parent_id];
  for (int k = 0; k < 4; ++k) {
    const int ch = p.children[k];
    dead_[ch] = 1;
    cell_lookup_.erase(cell_key(cells_[ch].level, cells_[ch].ix, cells_[ch].iy));
    p.children[k] = -1;
  }
}

void Mesh::rebuild_active_list() {
  active_.clear();
  for (int id = 0; id < n_cells(); ++id)
    if (!dead_[id] && !cells_[id].has_children()) active_.push_back(id);
}

FaceNeighbor Mesh::neighbor(int cell_id, int face) const {
  if (face < 0 || face > 3) throw std::invalid_argument("Mesh::neighbor: bad face index");
  const Cell& c = cells_[cell_id];
  const std::int64_t nx = c.ix + kFaceDx[face], ny = c.iy + kFaceDy[face];
  const std::int64_t n_per_dir = std::int64_t{1} << c.level;

  FaceNeighbor nb;
  if (nx < 0 || nx >= n_per_dir || ny < 0 || ny >= n_per_dir) {
    nb.kind = FaceNeighbor::Kind::boundary;
    nb.marker = static_cast<BoundaryMarker>(face);
    return nb;
  }

  if (const int same = find_cell(c.level, nx, ny); same >= 0) {
    if (!cells_[same].has_children()) {
      nb.kind = FaceNeighbor::Kind::same;
      nb.id = same;
    } else {
      nb.kind = FaceNeighbor::Kind::finer;
      nb.id = cells_[same].children[kFacingChildren[face][0]];
      nb.second_id = cells_[same].children[kFacingChildren[face][1]];
    }
    return nb;
  }

  if (const int coarse = find_cell(c.level - 1, nx >> 1, ny >> 1); coarse >= 0) {
    if (cells_[coarse].has_children())
      throw std::logic_error("Mesh::neighbor: inconsistent tree");
    nb.kind = FaceNeighbor::Kind::coarser;
    nb.id = coarse;
    nb.subface = (face == 1 || face == 3) ? static_cast<int>(c.iy & 1)
                                          : static_cast<int>(c.ix & 1);
    return nb;
  }
  throw std::logic_error("Mesh::neighbor: 2:1 balance violated");
}

int Mesh::locate(double x, double y) const {
  x = std::clamp(x, 0.0, 1.0);
  y = std::clamp(y, 0.0, 1.0);
  int id = 0;
  while (cells_[id].has_children()) {
    const Cell& c = cells_[id];
    const double h = std::ldexp(1.0, -(c.level + 1));
    const double cx = (2 * c.ix + 1) * h, cy = (2 * c.iy + 1) * h;
    id = c.children[(x >= cx ? 1 : 0) + 2 * (y >= cy ? 1 : 0)];
  }
  return id;
}

double Mesh::total_active_area() const {
  double area = 0.0;
  for (int id : active_) area += std::ldexp(1.0, -2 * cells_[id].level);
  return area;
}

void Mesh::check_invariants() const {
  if (std::abs(total_active_area() - 1.0) > 1e-14)
    throw std::logic_error("Mesh: active cells do not tile the unit square");
  for (int id : active_)
    for (int face = 0; face < 4; ++face) {
      const FaceNeighbor nb = neighbor(id, face);
      if (nb.kind == FaceNeighbor::Kind::finer &&
          (cells_[nb.id].has_children() || cells_[nb.second_id].has_children()))
        throw std::logic_error("Mesh: 2:1 balance violated");
    }
}

Mesh Mesh::build_unit_square(int n_global_refines) {
  if (n_global_refines < 0)
    throw std::invalid_argument("build_unit_square: negative refinement count");
  Mesh m;
  m.mesh_id_ = next_mesh_id();
  Cell root;
  root.id = 0;
  root.vertices = {m.get_or_create_vertex(0, 0, 0), m.get_or_create_vertex(0, 1, 0),
                   m.get_or_create_vertex(0, 1, 1), m.get_or_create_vertex(0, 0, 1)};
  m.cells_.push_back(root);
  m.dead_.push_back(0);
  m.cell_lookup_.emplace(cell_key(0, 0, 0), 0);
  m.rebuild_active_list();

  for (int r = 0; r < n_global_refines; ++r) {
    const std::vector<int> to_split = m.active_;
    for (int id : to_split) m.split(id);
    m.rebuild_active_list();
  }
  m.check_invariants();
  return m;
}

Mesh refine_and_coarsen(const Mesh& mesh, const std::vector<int>& refine_flags,
                        const std::vector<int>& coarsen_flags) {
  std::vector<char> in_refine(mesh.n_cells(), 0), in_coarsen(mesh.n_cells(), 0);
  auto validate = [&](const std::vector<int>& flags, std::vector<char>& marks) {
    for (int id : flags) {
      if (!mesh.is_active(id))
        throw std::invalid_argument("refine_and_coarsen: flag on inactive or unknown cell");
      marks[id] = 1;
    }
  };
  validate(refine_flags, in_refine);
  validate(coarsen_flags, in_coarsen);
  for (int id = 0; id < mesh.n_cells(); ++id)
    if (in_refine[id] && in_coarsen[id])
      throw std::invalid_argument("refine_and_coarsen: refine and coarsen flags overlap");

  Mesh out = mesh;
  out.mesh_id_ = next_mesh_id();
  out.parent_mesh_id_ = mesh.mesh_id();

  // Close the refine set: a cell about to be refined drags any coarser
  // face neighbor along (2:1 rule), and unrefined islands -- cells whose
  // refined-or-finer face neighbors outnumber the unrefined ones -- are
  // refined as well, like the reference meshing stacks do.
  std::vector<char> to_refine = in_refine;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> worklist;
    for (int id = 0; id < mesh.n_cells(); ++id)
      if (to_refine[id]) worklist.push_back(id);
    while (!worklist.empty()) {
      const int id = worklist.back();
      worklist.pop_back();
      for (int face = 0; face < 4; ++face) {
        const FaceNeighbor nb = mesh.neighbor(id, face);
        if (nb.kind == FaceNeighbor::Kind::coarser && !to_refine[nb.id]) {
          to_refine[nb.id] = 1;
          changed = true;
          worklist.push_back(nb.id);
        }
      }
    }
    for (int id : mesh.active_cells()) {
      if (to_refine[id]) continue;
      int refined = 0, unrefined = 0;
      for (int face = 0; face < 4; ++face) {
        const FaceNeighbor nb = mesh.neighbor(id, face);
        switch (nb.kind) {
          case FaceNeighbor::Kind::boundary:
            break;
          case FaceNeighbor::Kind::finer:
            ++refined;
            break;
          case FaceNeighbor::Kind::same:
            (to_refine[nb.id] ? refined : unrefined) += 1;
            break;
          case FaceNeighbor::Kind::coarser:
            ++unrefined;
            break;
        }
      }
      if (refined > unrefined) {
        to_refine[id] = 1;
        changed = true;
      }
    }
  }
  for (int id = 0; id < mesh.n_cells(); ++id)
    if (to_refine[id]) out.split(id);

  // Merge fully flagged sibling groups, oldest parents first. A merge is
  // skipped when any outer face of the group borders cells finer than the
  // group itself, which would break the balance.
  std::vector<int> candidate_parents;
  for (int id = 0; id < mesh.n_cells(); ++id) {
    if (!in_coarsen[id] || to_refine[id]) continue;
    const int parent = mesh.cell(id).parent;
    if (parent < 0) continue;
    bool all_flagged = true;
    for (int k = 0; k < 4; ++k) {
      const int sibling = mesh.cell(parent).children[k];
      if (!in_coarsen[sibling] || to_refine[sibling]) all_flagged = false;
    }
    if (all_flagged && mesh.cell(parent).children[0] == id)
      candidate_parents.push_back(parent);
  }
  std::sort(candidate_parents.begin(), candidate_parents.end());
  for (int parent : candidate_parents) {
    bool ok = true;
    for (int k = 0; k < 4 && ok; ++k) {
      const int child = out.cells_[parent].children[k];
      const int qx = k % 2, qy = k / 2;
      const int outer_faces[2] = {qx == 0 ? 3 : 1, qy == 0 ? 0 : 2};
      for (int face : outer_faces) {
        const FaceNeighbor nb = out.neighbor(child, face);
        if (nb.kind == FaceNeighbor::Kind::finer) ok = false;
      }
    }
    if (ok) out.merge(parent);
  }

  out.rebuild_active_list();
  out.check_invariants();
  return out;
}

}  // namespace dbf
