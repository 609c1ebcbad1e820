#include "dbf/dofs.hpp"
#include "dbf/elements.hpp"
#include "dbf/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dbf;

namespace {

// evaluate the distributed scalar Q2 velocity component on a cell
double eval_component(const Mesh& mesh, const DofHandler& dofs, const Vector& u,
                      int cell_id, int comp, const Vec2& xi) {
  const auto& nodes = dofs.cell_unodes(cell_id);
  const auto& q2 = ReferenceElement::q2();
  double v = 0;
  for (int a = 0; a < 9; ++a) v += u[2 * nodes[a] + comp] * q2.shape_value(a, xi);
  (void)mesh;
  return v;
}

}  // namespace

TEST_CASE("dof counts on uniform meshes") {
  for (int n = 0; n <= 5; ++n) {
    const Mesh mesh = Mesh::build_unit_square(n);
    const DofHandler dofs = distribute_dofs(mesh);
    const int side = 1 << n;
    CHECK(dofs.n_velocity_dofs() == 2 * (2 * side + 1) * (2 * side + 1));
    CHECK(dofs.n_pressure_dofs() == (side + 1) * (side + 1));
  }
  // the ladder the convergence study runs on
  const int expected[5] = {59, 187, 659, 2467, 9539};
  for (int n = 1; n <= 5; ++n) {
    const Mesh mesh = Mesh::build_unit_square(n);
    const DofHandler dofs = distribute_dofs(mesh);
    CHECK(dofs.n_total_dofs() == expected[n - 1]);
  }
  const DofHandler single = distribute_dofs(Mesh::build_unit_square(0));
  CHECK(single.n_velocity_dofs() == 18);
  CHECK(single.n_pressure_dofs() == 4);
}

TEST_CASE("hanging constraints empty on uniform mesh") {
  const Mesh mesh = Mesh::build_unit_square(2);
  const DofHandler dofs = distribute_dofs(mesh);
  CHECK(hanging_node_constraints(mesh, dofs).size() == 0);
}

TEST_CASE("hanging constraint weights") {
  const Mesh m1 = Mesh::build_unit_square(1);
  const Mesh mesh = refine_and_coarsen(m1, {m1.active_cells()[0]}, {});
  const DofHandler dofs = distribute_dofs(mesh);
  const ConstraintSet constraints = hanging_node_constraints(mesh, dofs);

  // per nonconforming face: 2 velocity components on the fine edge midnode
  // + 1 pressure vertex (shared by the face pair)
  CHECK(constraints.size() == 2 * (2 * 2) + 2);

  int q1_lines = 0, q2_lines = 0;
  for (const auto& [dof, line] : constraints.lines()) {
    double wsum = 0;
    for (auto& [m, w] : line.masters) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));  // interpolatory rows
    if (line.masters.size() == 2) {
      ++q1_lines;
      CHECK(line.masters[0].second == doctest::Approx(0.5));
      CHECK(line.masters[1].second == doctest::Approx(0.5));
    } else {
      REQUIRE(line.masters.size() == 3);
      ++q2_lines;
      std::vector<double> w = {line.masters[0].second, line.masters[1].second,
                               line.masters[2].second};
      std::sort(w.begin(), w.end());
      CHECK(w[0] == doctest::Approx(-1.0 / 8.0).epsilon(1e-14));
      CHECK(w[1] == doctest::Approx(3.0 / 8.0).epsilon(1e-14));
      CHECK(w[2] == doctest::Approx(3.0 / 4.0).epsilon(1e-14));
    }
    (void)dof;
  }
  CHECK(q1_lines == 2);
  CHECK(q2_lines == 8);
}

TEST_CASE("constrained velocity is continuous across nonconforming faces") {
  Mesh mesh = Mesh::build_unit_square(2);
  mesh = refine_and_coarsen(mesh, {mesh.active_cells()[5], mesh.active_cells()[9]}, {});
  const DofHandler dofs = distribute_dofs(mesh);
  ConstraintSet constraints = hanging_node_constraints(mesh, dofs);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1, 1);
  Vector u(dofs.n_velocity_dofs()), p(dofs.n_pressure_dofs());
  for (int i = 0; i < u.size(); ++i) u[i] = dist(rng);
  for (int i = 0; i < p.size(); ++i) p[i] = dist(rng);
  constraints.distribute(u, p);

  for (int id : mesh.active_cells())
    for (int face = 0; face < 4; ++face) {
      const auto nb = mesh.neighbor(id, face);
      if (nb.kind != FaceNeighbor::Kind::coarser) continue;
      // sample the shared edge at 5 points from both sides
      for (int s = 0; s < 5; ++s) {
        const double t = s / 4.0;
        // our face parameterization
        Vec2 xi_fine;
        switch (face) {
          case 0: xi_fine = Vec2(t, 0); break;
          case 1: xi_fine = Vec2(1, t); break;
          case 2: xi_fine = Vec2(t, 1); break;
          default: xi_fine = Vec2(0, t); break;
        }
        const auto corners = mesh.cell_corners(id);
        const Vec2 x = corners[0] + xi_fine * mesh.cell_size(id);
        const auto coarse_corners = mesh.cell_corners(nb.id);
        const Vec2 xi_coarse = (x - coarse_corners[0]) / mesh.cell_size(nb.id);
        for (int comp = 0; comp < 2; ++comp) {
          const double fine_val = eval_component(mesh, dofs, u, id, comp, xi_fine);
          const double coarse_val = eval_component(mesh, dofs, u, nb.id, comp, xi_coarse);
          CHECK(std::abs(fine_val - coarse_val) <= 1e-12);
        }
      }
    }
}

TEST_CASE("dirichlet constraints for the cavity") {
  const Mesh mesh = Mesh::build_unit_square(2);
  const DofHandler dofs = distribute_dofs(mesh);
  auto cavity = [](BoundaryMarker marker, const Vec2&) {
    return marker == BoundaryMarker::top ? Vec2(1, 0) : Vec2(0, 0);
  };
  const ConstraintSet constraints = dirichlet_constraints(dofs, cavity);

  // 2 components per boundary node; 2*(2*4+1)-ish ring of Q2 nodes
  for (int node = 0; node < dofs.n_velocity_nodes(); ++node) {
    const Vec2 x = dofs.velocity_node(node);
    const bool on_boundary = x[0] == 0 || x[0] == 1 || x[1] == 0 || x[1] == 1;
    CHECK(constraints.is_constrained(2 * node) == on_boundary);
    if (!on_boundary) continue;
    const double expected_ux = (x[1] == 1.0) ? 1.0 : 0.0;  // corners follow the lid
    CHECK(constraints.line(2 * node).inhomogeneity == doctest::Approx(expected_ux));
    CHECK(constraints.line(2 * node + 1).inhomogeneity == doctest::Approx(0.0));
  }
}

TEST_CASE("newton update boundary values are zero") {
  const Mesh mesh = Mesh::build_unit_square(1);
  const DofHandler dofs = distribute_dofs(mesh);
  auto cavity = [](BoundaryMarker marker, const Vec2&) {
    return marker == BoundaryMarker::top ? Vec2(1, 0) : Vec2(0, 0);
  };
  const ConstraintSet constraints = dirichlet_constraints(dofs, cavity).homogeneous();
  for (const auto& [dof, line] : constraints.lines()) {
    (void)dof;
    CHECK(line.inhomogeneity == 0.0);
  }
}

TEST_CASE("mms boundary values interpolate the given function") {
  const Mesh mesh = Mesh::build_unit_square(1);
  const DofHandler dofs = distribute_dofs(mesh);
  auto g = [](BoundaryMarker, const Vec2& x) {
    return Vec2(std::sin(x[0] + x[1]), std::cos(x[0]));
  };
  const ConstraintSet constraints = dirichlet_constraints(dofs, g);
  for (int node = 0; node < dofs.n_velocity_nodes(); ++node) {
    if (dofs.boundary_mask(node) == 0) continue;
    const Vec2 expected = g(BoundaryMarker::top, dofs.velocity_node(node));
    CHECK(constraints.line(2 * node).inhomogeneity == doctest::Approx(expected[0]));
    CHECK(constraints.line(2 * node + 1).inhomogeneity == doctest::Approx(expected[1]));
  }
}

TEST_CASE("constraint closure resolves chains") {
  ConstraintSet c;
  ConstraintSet::Line l1;
  l1.masters = {{1, 0.5}, {2, 0.5}};
  c.add_line(0, l1);
  ConstraintSet::Line l2;
  l2.masters = {{3, 2.0}};
  l2.inhomogeneity = 1.0;
  c.add_line(1, l2);
  c.close();
  const auto& line = c.line(0);
  REQUIRE(line.masters.size() == 2);
  CHECK(line.masters[0].first == 2);
  CHECK(line.masters[0].second == doctest::Approx(0.5));
  CHECK(line.masters[1].first == 3);
  CHECK(line.masters[1].second == doctest::Approx(1.0));
  CHECK(line.inhomogeneity == doctest::Approx(0.5));
}
