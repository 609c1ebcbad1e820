#pragma once

#include "dbf/mesh.hpp"
#include "dbf/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace dbf {

/// Affine constraints x_c = sum_k w_k x_{m_k} + b attached to global DoF
/// indices (velocity block first, then pressure). Used for hanging nodes
/// and Dirichlet boundary values.
class ConstraintSet {
 public:
  struct Line {
    std::vector<std::pair<int, double>> masters;
    double inhomogeneity = 0.0;
  };

  void add_line(int dof, Line line);
  bool is_constrained(int dof) const { return lines_.count(dof) != 0; }
  const Line& line(int dof) const { return lines_.at(dof); }
  int size() const { return static_cast<int>(lines_.size()); }
  const std::map<int, Line>& lines() const { return lines_; }

  /// Resolves constraint chains so that no master is itself constrained.
  void close();
  bool closed() const { return closed_; }

  ConstraintSet merged(const ConstraintSet& other) const;
  /// Same masters, zero inhomogeneities (boundary data for Newton updates).
  ConstraintSet homogeneous() const;

  /// Overwrites constrained entries of the split coefficient vectors with
  /// their master combination.
  void distribute(Vector& u, Vector& p) const;

 private:
  std::map<int, Line> lines_;
  bool closed_ = true;  // the empty set is trivially closed
};

/// Global enumeration for the vector-Q2 / scalar-Q1 Taylor-Hood pair.
/// Scalar Q2 nodes and Q1 vertices are deduplicated by exact dyadic
/// coordinates; velocity DoFs are 2*node+component and come before all
/// pressure DoFs in the global numbering.
class DofHandler {
 public:
  explicit DofHandler(const Mesh& mesh);

  int n_velocity_dofs() const { return 2 * n_unodes_; }
  int n_pressure_dofs() const { return n_pnodes_; }
  int n_total_dofs() const { return n_velocity_dofs() + n_pressure_dofs(); }

  int n_velocity_nodes() const { return n_unodes_; }
  const Vec2& velocity_node(int node) const { return unode_coords_[node]; }
  const Vec2& pressure_node(int node) const { return pnode_coords_[node]; }

  /// Scalar Q2 node ids of a cell, lexicographic (x fastest).
  const std::array<int, 9>& cell_unodes(int cell_id) const;
  /// Q1 vertex node ids of a cell, lexicographic.
  const std::array<int, 4>& cell_pnodes(int cell_id) const;

  /// Global velocity DoFs of a cell: local index 2*a+c for node a, component c.
  std::array<int, 18> cell_velocity_dofs(int cell_id) const;
  /// Global pressure DoFs of a cell (offset by n_velocity_dofs).
  std::array<int, 4> cell_pressure_dofs(int cell_id) const;

  /// Bitmask of BoundaryMarker bits the node lies on (0 = interior).
  unsigned boundary_mask(int unode) const { return unode_boundary_[unode]; }
  std::vector<int> boundary_velocity_nodes(BoundaryMarker marker) const;

  const Mesh& mesh() const { return *mesh_; }

 private:
  const Mesh* mesh_;
  int n_unodes_ = 0, n_pnodes_ = 0;
  std::vector<Vec2> unode_coords_, pnode_coords_;
  std::vector<unsigned char> unode_boundary_;
  std::vector<std::array<int, 9>> cell_unodes_;
  std::vector<std::array<int, 4>> cell_pnodes_;
  std::vector<int> active_pos_;  // cell id -> position in active list, -1 otherwise
};

DofHandler distribute_dofs(const Mesh& mesh);

/// Interpolatory constraints tying the fine side of every nonconforming
/// face to the coarse-side trace; the result is closed.
ConstraintSet hanging_node_constraints(const Mesh& mesh, const DofHandler& dofs);

/// Fixes every boundary velocity DoF to the interpolated boundary value.
/// Corner nodes resolve their marker by priority top, bottom, left, right.
ConstraintSet dirichlet_constraints(
    const DofHandler& dofs,
    const std::function<Vec2(BoundaryMarker, const Vec2&)>& boundary_fn);

}  // namespace dbf
