#include "dbf/elements.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dbf;

TEST_CASE("gauss rule basics") {
  const auto r1 = gauss_rule(1);
  REQUIRE(r1.size() == 1);
  CHECK(r1.points[0][0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r1.points[0][1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r1.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

  for (int q = 1; q <= 8; ++q) {
    const auto r = gauss_rule(q);
    double wsum = 0;
    for (double w : r.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(gauss_rule(0), std::invalid_argument);
  CHECK_THROWS_AS(gauss_rule(9), std::invalid_argument);
}

TEST_CASE("q=3 integrates x^5 y^5 exactly") {
  const auto r = gauss_rule(3);
  double integral = 0;
  for (int k = 0; k < r.size(); ++k)
    integral += r.weights[k] * std::pow(r.points[k][0], 5) * std::pow(r.points[k][1], 5);
  CHECK(integral == doctest::Approx(1.0 / 36.0).epsilon(1e-13));
}

TEST_CASE("quadrature exactness up to degree 2q-1 per direction") {
  const auto r = gauss_rule(3);
  for (int a = 0; a <= 5; ++a)
    for (int b = 0; b <= 5; ++b) {
      double integral = 0;
      for (int k = 0; k < r.size(); ++k)
        integral +=
            r.weights[k] * std::pow(r.points[k][0], a) * std::pow(r.points[k][1], b);
      const double exact = 1.0 / ((a + 1) * (b + 1));
      CHECK(std::abs(integral - exact) <= 1e-13 * exact);
    }
}

TEST_CASE("Lagrange property and partition of unity") {
  for (const auto* e : {&ReferenceElement::q1(), &ReferenceElement::q2()}) {
    for (int i = 0; i < e->n_basis(); ++i)
      for (int j = 0; j < e->n_basis(); ++j)
        CHECK(e->shape_value(i, e->node(j)) ==
              doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-14));
  }
  const auto& q2 = ReferenceElement::q2();
  const Vec2 xi(0.3, 0.7);
  double sum = 0;
  Vec2 grad_sum = Vec2::Zero();
  for (int i = 0; i < 9; ++i) {
    sum += q2.shape_value(i, xi);
    grad_sum += q2.shape_gradient(i, xi);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(grad_sum.norm() <= 1e-13);
}

TEST_CASE("Q2 mid-node 1D factor at 0.25") {
  // node 1 of the bottom edge has the pure mid-node x-factor
  const auto& q2 = ReferenceElement::q2();
  CHECK(q2.shape_value(1, Vec2(0.25, 0.0)) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("Q1 corner gradient") {
  const auto& q1 = ReferenceElement::q1();
  const Vec2 g = q1.shape_gradient(0, Vec2(0.0, 0.0));
  CHECK(g[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(0.05, 0.95);
  const double h = 1e-6;
  for (const auto* e : {&ReferenceElement::q1(), &ReferenceElement::q2()}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Vec2 xi(dist(rng), dist(rng));
      for (int i = 0; i < e->n_basis(); ++i) {
        const Vec2 g = e->shape_gradient(i, xi);
        const double fdx = (e->shape_value(i, xi + Vec2(h, 0)) -
                            e->shape_value(i, xi - Vec2(h, 0))) /
                           (2 * h);
        const double fdy = (e->shape_value(i, xi + Vec2(0, h)) -
                            e->shape_value(i, xi - Vec2(0, h))) /
                           (2 * h);
        CHECK(std::abs(g[0] - fdx) <= 1e-8);
        CHECK(std::abs(g[1] - fdy) <= 1e-8);
      }
    }
  }
}

TEST_CASE("basis index out of range") {
  CHECK_THROWS_AS(ReferenceElement::q2().shape_value(9, Vec2(0.5, 0.5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(ReferenceElement::q1().shape_gradient(-1, Vec2(0.5, 0.5)),
                  std::invalid_argument);
}

TEST_CASE("bilinear cell map") {
  const std::array<Vec2, 4> unit = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  const auto m = map_cell(unit, Vec2(0.5, 0.5));
  CHECK(m.x[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.x[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.det_jacobian == doctest::Approx(1.0).epsilon(1e-15));

  // level-3 cell: 1/8 x 1/8 square
  const double h = 1.0 / 8.0;
  const std::array<Vec2, 4> small = {Vec2(0.25, 0.5), Vec2(0.25 + h, 0.5),
                                     Vec2(0.25 + h, 0.5 + h), Vec2(0.25, 0.5 + h)};
  for (const Vec2 xi : {Vec2(0.1, 0.9), Vec2(0.5, 0.5), Vec2(0.7, 0.2)})
    CHECK(map_cell(small, xi).det_jacobian == doctest::Approx(1.0 / 64.0).epsilon(1e-14));

  const std::array<Vec2, 4> degenerate = {Vec2(0, 0), Vec2(0, 0), Vec2(0, 0), Vec2(0, 0)};
  CHECK_THROWS_AS(map_cell(degenerate, Vec2(0.5, 0.5)), std::invalid_argument);
}

TEST_CASE("physical gradient via inverse-transpose Jacobian") {
  // distorted quad to exercise the full bilinear map
  const std::array<Vec2, 4> quad = {Vec2(0, 0), Vec2(1.2, 0.1), Vec2(1.0, 1.1),
                                    Vec2(-0.1, 0.9)};
  const auto& q2 = ReferenceElement::q2();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.1, 0.9);
  const double h = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
    const Vec2 xi(dist(rng), dist(rng));
    const auto m = map_cell(quad, xi);
    const Mat2 jinv_t = m.jacobian.inverse().transpose();
    for (int i : {0, 4, 8}) {
      const Vec2 phys_grad = jinv_t * q2.shape_gradient(i, xi);
      // compose map^-1 with the shape function by nudging xi and tracking x
      const auto mx = map_cell(quad, xi + Vec2(h, 0));
      const auto my = map_cell(quad, xi + Vec2(0, h));
      const auto mx0 = map_cell(quad, xi - Vec2(h, 0));
      const auto my0 = map_cell(quad, xi - Vec2(0, h));
      const double dfdxi = (q2.shape_value(i, xi + Vec2(h, 0)) -
                            q2.shape_value(i, xi - Vec2(h, 0))) /
                           (2 * h);
      const double dfdeta = (q2.shape_value(i, xi + Vec2(0, h)) -
                             q2.shape_value(i, xi - Vec2(0, h))) /
                            (2 * h);
      // chain rule check: grad_x f . dx/dxi = df/dxi
      const Vec2 dxdxi = (mx.x - mx0.x) / (2 * h);
      const Vec2 dxdeta = (my.x - my0.x) / (2 * h);
      CHECK(std::abs(phys_grad.dot(dxdxi) - dfdxi) <= 1e-7);
      CHECK(std::abs(phys_grad.dot(dxdeta) - dfdeta) <= 1e-7);
    }
  }
}

TEST_CASE("Q2 interpolation of a biquadratic is exact at quadrature points") {
  auto f = [](const Vec2& p) {
    return (1.0 + 2.0 * p[0] - p[0] * p[0]) * (0.5 - p[1] + 3.0 * p[1] * p[1]);
  };
  const auto& q2 = ReferenceElement::q2();
  double coeff[9];
  for (int i = 0; i < 9; ++i) coeff[i] = f(q2.node(i));
  const auto rule = gauss_rule(3);
  for (int k = 0; k < rule.size(); ++k) {
    double value = 0;
    for (int i = 0; i < 9; ++i) value += coeff[i] * q2.shape_value(i, rule.points[k]);
    CHECK(std::abs(value - f(rule.points[k])) <= 1e-13);
  }
}
