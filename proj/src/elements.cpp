#include "dbf/elements.hpp"

#include <cmath>
#include <stdexcept>

namespace dbf {

namespace {

// 1D Gauss-Legendre on [-1,1] via Newton iteration on P_n.
void gauss_legendre_1d(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0 = 0.0, p1 = 0.0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = xi;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(xi), derivative from the standard identity
      const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      const double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    p0 = 1.0;
    p1 = xi;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
    x[i] = xi;
    w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
}

// 1D Lagrange bases on [0,1]: linear at {0,1}, quadratic at {0,1/2,1}.
double lag(int degree, int k, double t) {
  if (degree == 1) return k == 0 ? 1.0 - t : t;
  switch (k) {
    case 0: return (2.0 * t - 1.0) * (t - 1.0);
    case 1: return 4.0 * t * (1.0 - t);
    default: return t * (2.0 * t - 1.0);
  }
}

double dlag(int degree, int k, double t) {
  if (degree == 1) return k == 0 ? -1.0 : 1.0;
  switch (k) {
    case 0: return 4.0 * t - 3.0;
    case 1: return 4.0 - 8.0 * t;
    default: return 4.0 * t - 1.0;
  }
}

}  // namespace

QuadratureRule1d gauss_rule_1d(int q) {
  if (q < 1 || q > 8) throw std::invalid_argument("gauss_rule_1d: q must be in [1, 8]");
  QuadratureRule1d rule;
  gauss_legendre_1d(q, rule.points, rule.weights);
  std::vector<std::pair<double, double>> nodes(q);
  for (int i = 0; i < q; ++i)  // map [-1,1] -> [0,1]
    nodes[i] = {0.5 * (1.0 + rule.points[i]), 0.5 * rule.weights[i]};
  std::sort(nodes.begin(), nodes.end());
  for (int i = 0; i < q; ++i) {
    rule.points[i] = nodes[i].first;
    rule.weights[i] = nodes[i].second;
  }
  return rule;
}

QuadratureRule gauss_rule(int q) {
  if (q < 1 || q > 8) throw std::invalid_argument("gauss_rule: q must be in [1, 8]");
  std::vector<double> x, w;
  gauss_legendre_1d(q, x, w);
  // map [-1,1] -> [0,1]
  for (int i = 0; i < q; ++i) {
    x[i] = 0.5 * (1.0 + x[i]);
    w[i] *= 0.5;
  }
  QuadratureRule rule;
  rule.points.reserve(q * q);
  rule.weights.reserve(q * q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < q; ++i) {
      rule.points.emplace_back(x[i], x[j]);
      rule.weights.push_back(w[i] * w[j]);
    }
  return rule;
}

ReferenceElement::ReferenceElement(int degree) : degree_(degree) {
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("ReferenceElement: degree must be 1 or 2");
}

void ReferenceElement::check_index(int i) const {
  if (i < 0 || i >= n_basis())
    throw std::invalid_argument("ReferenceElement: basis index out of range");
}

Vec2 ReferenceElement::node(int i) const {
  check_index(i);
  const int n1 = degree_ + 1;
  return Vec2(static_cast<double>(i % n1) / degree_,
              static_cast<double>(i / n1) / degree_);
}

double ReferenceElement::shape_value(int i, const Vec2& xi) const {
  check_index(i);
  const int n1 = degree_ + 1;
  return lag(degree_, i % n1, xi[0]) * lag(degree_, i / n1, xi[1]);
}

Vec2 ReferenceElement::shape_gradient(int i, const Vec2& xi) const {
  check_index(i);
  const int n1 = degree_ + 1;
  const int kx = i % n1, ky = i / n1;
  return Vec2(dlag(degree_, kx, xi[0]) * lag(degree_, ky, xi[1]),
              lag(degree_, kx, xi[0]) * dlag(degree_, ky, xi[1]));
}

const ReferenceElement& ReferenceElement::q1() {
  static const ReferenceElement e(1);
  return e;
}

const ReferenceElement& ReferenceElement::q2() {
  static const ReferenceElement e(2);
  return e;
}

MappedPoint map_cell(const std::array<Vec2, 4>& corners, const Vec2& xi) {
  // corners counterclockwise: SW, SE, NE, NW
  const double s = xi[0], t = xi[1];
  const double n[4] = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
  const double dn_ds[4] = {-(1 - t), (1 - t), t, -t};
  const double dn_dt[4] = {-(1 - s), -s, s, (1 - s)};

  MappedPoint m;
  m.x.setZero();
  m.jacobian.setZero();
  for (int a = 0; a < 4; ++a) {
    m.x += n[a] * corners[a];
    m.jacobian.col(0) += dn_ds[a] * corners[a];
    m.jacobian.col(1) += dn_dt[a] * corners[a];
  }
  m.det_jacobian = m.jacobian.determinant();
  if (!(m.det_jacobian > 1e-300))
    throw std::invalid_argument("map_cell: degenerate cell");
  return m;
}

}  // namespace dbf
