#pragma once

#include "dbf/assembly.hpp"
#include "dbf/dofs.hpp"
#include "dbf/mesh.hpp"
#include "dbf/types.hpp"

#include <string>
#include <vector>

namespace dbf {

/// Point evaluation of the finite element fields (locates the owning
/// active cell, then evaluates the constrained field cell-locally).
Vec2 evaluate_velocity(const Mesh& mesh, const DofHandler& dofs, const Vector& u,
                       const Vec2& point);
double evaluate_pressure(const Mesh& mesh, const DofHandler& dofs, const Vector& p,
                         const Vec2& point);

struct ExactSolution {
  Vec2 velocity;
  double pressure;
};

/// Manufactured pair u = (sin(pi x), -pi y cos(pi x)), p = sin(pi x) cos(pi y);
/// the velocity is divergence-free.
ExactSolution mms_exact(double x, double y);
Mat2 mms_velocity_gradient(double x, double y);  // (c, d) = d u_c / d x_d

/// Momentum forcing that makes the manufactured pair solve the full model
/// with every coefficient equal to one.
Vec2 mms_forcing(double x, double y);
/// Variant-aware forcing for arbitrary parameters.
Vec2 mms_forcing(double x, double y, const ModelParams& params);

/// (1, 0) on the moving lid, zero on the other walls.
Vec2 cavity_boundary(BoundaryMarker marker, double x, double y);

struct ProblemSpec {
  enum class Kind { mms, cavity };
  Kind kind = Kind::cavity;

  static ProblemSpec mms();
  static ProblemSpec cavity();

  Vec2 boundary_velocity(BoundaryMarker marker, const Vec2& x) const;
  /// Analytic momentum forcing for the MMS problem, empty for the cavity.
  ForcingFunction forcing_for(const ModelParams& params) const;
};

struct ErrorNorms {
  double l2_u = 0, h1_u = 0, l2_p = 0;
};

/// Errors of an MMS solution: L2 and full H1 norms for the velocity and
/// the gauge-matched L2 pressure error, measured with the assembly
/// quadrature rule.
ErrorNorms error_norms(const Mesh& mesh, const DofHandler& dofs,
                       const SolutionState& state);

struct Profile {
  std::vector<double> coord;
  std::vector<double> value;
};

struct CenterlineProfiles {
  Profile ux_on_vertical;   // u_x along x = 0.5, coord = y
  Profile uy_on_horizontal; // u_y along y = 0.5, coord = x
};

CenterlineProfiles centerline_profiles(const Mesh& mesh, const DofHandler& dofs,
                                       const SolutionState& state, int n_samples = 201);

struct GhiaProfile {
  std::string source_line;  // leading comment of the data file
  std::vector<double> coord;
  std::vector<double> value;
};

struct GhiaReference {
  GhiaProfile u_profile;  // u_x over y on the vertical centerline
  GhiaProfile v_profile;  // u_y over x on the horizontal centerline
};

/// Loads the bundled benchmark tables for Re in {1000, 3200}.
GhiaReference ghia_reference(int re, const std::string& data_dir);
/// Re-emits a loaded profile in the bundled file format.
std::string ghia_profile_to_csv(const GhiaProfile& profile);

}  // namespace dbf
