#pragma once

#include "dbf/types.hpp"

#include <array>
#include <vector>

namespace dbf {

/// Tensor-product Gauss-Legendre rule on the reference square [0,1]^2.
/// A rule with q points per direction integrates all monomials x^a y^b
/// with a, b <= 2q-1 exactly; the weights sum to 1.
struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

/// q points per direction, 1 <= q <= 8.
QuadratureRule gauss_rule(int q);

/// 1D Gauss-Legendre points and weights on [0,1] (weights sum to 1).
struct QuadratureRule1d {
  std::vector<double> points;
  std::vector<double> weights;
};
QuadratureRule1d gauss_rule_1d(int q);

/// Scalar Lagrange element Q1 or Q2 on the reference square [0,1]^2.
/// Nodes are the (degree+1)^2 tensor lattice points, numbered
/// lexicographically with the x index running fastest.
class ReferenceElement {
 public:
  explicit ReferenceElement(int degree);

  int degree() const { return degree_; }
  int n_basis() const { return (degree_ + 1) * (degree_ + 1); }
  Vec2 node(int i) const;

  double shape_value(int i, const Vec2& xi) const;
  Vec2 shape_gradient(int i, const Vec2& xi) const;

  static const ReferenceElement& q1();
  static const ReferenceElement& q2();

 private:
  void check_index(int i) const;
  int degree_;
};

/// Result of the bilinear cell mapping at one reference point.
struct MappedPoint {
  Vec2 x;        // physical point
  Mat2 jacobian; // columns d x / d xi_k
  double det_jacobian;
};

/// Bilinear map of a quadrilateral given by its 4 corners in
/// counterclockwise order (SW, SE, NE, NW for the axis-aligned cells
/// used here). Throws on a degenerate (zero-area) cell.
MappedPoint map_cell(const std::array<Vec2, 4>& corners, const Vec2& xi);

}  // namespace dbf
