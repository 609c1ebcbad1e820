#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dbf {

using Vector = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Thrown by iterative solvers when the iteration budget is exhausted.
/// Carries the best iterate reached so far.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, Vector best_iterate, int iterations)
      : std::runtime_error(what),
        best(std::move(best_iterate)),
        iterations(iterations) {}

  Vector best;
  int iterations;
};

}  // namespace dbf
