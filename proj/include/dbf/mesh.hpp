#pragma once

#include "dbf/types.hpp"

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace dbf {

/// Boundary markers of the unit square, also used as local face indices.
enum class BoundaryMarker : int { bottom = 0, right = 1, top = 2, left = 3 };

struct Cell {
  int id = -1;
  int level = 0;
  int parent = -1;
  std::array<int, 4> children{-1, -1, -1, -1};  // z-order: SW, SE, NW, NE quadrants
  std::array<int, 4> vertices{};                // counterclockwise: SW, SE, NE, NW
  std::int64_t ix = 0, iy = 0;                  // anchor in units of 2^-level

  bool has_children() const { return children[0] >= 0; }
};

/// Face neighborhood of an active cell across one of its faces.
struct FaceNeighbor {
  enum class Kind { boundary, same, coarser, finer };
  Kind kind = Kind::boundary;
  BoundaryMarker marker = BoundaryMarker::bottom;  // boundary case
  int id = -1;        // same / coarser; first (lower-coordinate) child for finer
  int second_id = -1; // second child for finer
  int subface = -1;   // our position (0 or 1) along the coarser neighbor's face
};

/// Hierarchical quadtree mesh of the unit square. Active cells (leaves)
/// tile the square exactly; all coordinates are dyadic rationals and
/// topology is resolved by exact integer keys. A mesh is immutable after
/// construction; refine_and_coarsen produces a new mesh and records the
/// lineage so solutions can be transferred.
class Mesh {
 public:
  static Mesh build_unit_square(int n_global_refines);

  int n_cells() const { return static_cast<int>(cells_.size()); }
  int n_active() const { return static_cast<int>(active_.size()); }
  const std::vector<int>& active_cells() const { return active_; }
  const Cell& cell(int id) const { return cells_[id]; }
  bool is_active(int id) const;

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  const Vec2& vertex(int v) const { return vertices_[v]; }

  /// Side length 2^-level of a cell.
  double cell_size(int id) const;
  /// Corner coordinates, counterclockwise from SW.
  std::array<Vec2, 4> cell_corners(int id) const;

  FaceNeighbor neighbor(int cell_id, int face) const;

  /// Active cell containing (x, y); points are clamped to the unit square,
  /// ties on internal edges resolve to the upper/right cell.
  int locate(double x, double y) const;

  std::uint64_t mesh_id() const { return mesh_id_; }
  std::uint64_t parent_mesh_id() const { return parent_mesh_id_; }

  /// Sum of active cell areas; equals 1 up to roundoff.
  double total_active_area() const;

  friend Mesh refine_and_coarsen(const Mesh& mesh,
                                 const std::vector<int>& refine_flags,
                                 const std::vector<int>& coarsen_flags);

 private:
  Mesh() = default;

  int find_cell(int level, std::int64_t ix, std::int64_t iy) const;
  int get_or_create_vertex(int level, std::int64_t vx2, std::int64_t vy2);
  void split(int cell_id);
  void merge(int parent_id);
  void rebuild_active_list();
  void check_invariants() const;

  std::vector<Cell> cells_;
  std::vector<char> dead_;
  std::vector<Vec2> vertices_;
  std::unordered_map<std::uint64_t, int> cell_lookup_;
  std::unordered_map<std::uint64_t, int> vertex_lookup_;
  std::vector<int> active_;
  std::uint64_t mesh_id_ = 0;
  std::uint64_t parent_mesh_id_ = 0;
};

/// Quadrisects every refine-flagged cell, restores 2:1 face balance by
/// refining further cells as needed, and merges sibling groups whose four
/// members are all coarsen-flagged when the merge keeps the balance.
/// Flags must reference active cells and the two sets must be disjoint.
Mesh refine_and_coarsen(const Mesh& mesh,
                        const std::vector<int>& refine_flags,
                        const std::vector<int>& coarsen_flags);

/// Euclidean diagonal sqrt(2) * 2^-level.
double cell_diameter(const Cell& cell);

}  // namespace dbf
