#pragma once

#include "dbf/types.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace dbf {

/// Compressed sparse row matrix with sorted column indices per row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  /// Pattern constructor: columns_per_row[i] must be sorted and unique.
  CsrMatrix(int rows, int cols, const std::vector<std::vector<int>>& columns_per_row);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx_.size()); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  void set_zero();
  /// Accumulates into an entry that must exist in the pattern.
  void add(int i, int j, double value);
  double operator()(int i, int j) const;  // 0 for entries outside the pattern
  bool has_entry(int i, int j) const;

  Vector multiply(const Vector& x) const;             // A x
  Vector multiply_transpose(const Vector& x) const;   // A^T x
  Vector diagonal() const;

 private:
  int find(int i, int j) const;
  int rows_ = 0, cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// Incremental pattern builder; duplicate insertions are deduplicated.
class SparsityPattern {
 public:
  SparsityPattern(int rows, int cols) : rows_(rows), cols_(cols), columns_(rows) {}
  void add(int i, int j) { columns_[i].push_back(j); }
  template <class RowRange, class ColRange>
  void add_block(const RowRange& rows, const ColRange& cols) {
    for (int i : rows)
      for (int j : cols) columns_[i].push_back(j);
  }
  CsrMatrix freeze() const;

 private:
  int rows_, cols_;
  std::vector<std::vector<int>> columns_;
};

/// Sparse LU with partial pivoting and a fill-reducing column ordering,
/// reusable for multiple right-hand sides.
class LuFactorization {
 public:
  Vector solve(const Vector& b) const;
  int rows() const;

  // factor access for verification: P * diag(row_scaling) * A * Q = L * U
  std::vector<int> row_permutation() const;
  std::vector<int> col_permutation() const;
  std::vector<double> row_scaling() const;
  Vector lower_solve(Vector b) const;  // L^{-1} b
  Vector upper_solve(Vector b) const;  // U^{-1} b

  struct Impl;  // opaque UMFPACK state

 private:
  friend LuFactorization lu_factorize(const CsrMatrix& A);
  std::shared_ptr<const Impl> impl_;
};

/// Throws std::runtime_error on a structurally or numerically singular matrix.
LuFactorization lu_factorize(const CsrMatrix& A);

using LinearOperator = std::function<void(const Vector& x, Vector& y)>;

struct SolveResult {
  Vector x;
  int iterations = 0;
};

/// Preconditioned conjugate gradients; A and the preconditioner must be SPD.
/// Throws ConvergenceError past the iteration budget.
SolveResult cg_solve(const LinearOperator& A, const Vector& b,
                     const LinearOperator& precondition, double rel_tol,
                     int max_iterations = 1000);
SolveResult cg_solve(const CsrMatrix& A, const Vector& b,
                     const LinearOperator& precondition, double rel_tol,
                     int max_iterations = 1000);

/// Right-preconditioned flexible GMRES. The preconditioner may vary between
/// applications (inner iterative solves are fine). Throws ConvergenceError
/// carrying the best iterate when the budget is exhausted.
SolveResult fgmres(const LinearOperator& apply_A, const LinearOperator& apply_P_inv,
                   const Vector& b, double rel_tol, int restart = 200,
                   int max_iterations = 2000);

/// Matrix Market coordinate format, 1-based indices.
void write_matrix_market(const CsrMatrix& A, std::ostream& out);

}  // namespace dbf
