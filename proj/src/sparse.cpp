#include "dbf/sparse.hpp"

#include "dbf/numio.hpp"

#include <umfpack.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dbf {

CsrMatrix::CsrMatrix(int rows, int cols,
                     const std::vector<std::vector<int>>& columns_per_row)
    : rows_(rows), cols_(cols) {
  row_ptr_.resize(rows + 1, 0);
  std::int64_t nnz = 0;
  for (int i = 0; i < rows; ++i) {
    nnz += static_cast<std::int64_t>(columns_per_row[i].size());
    row_ptr_[i + 1] = static_cast<int>(nnz);
  }
  col_idx_.reserve(nnz);
  for (int i = 0; i < rows; ++i)
    col_idx_.insert(col_idx_.end(), columns_per_row[i].begin(), columns_per_row[i].end());
  values_.assign(nnz, 0.0);
}

void CsrMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

int CsrMatrix::find(int i, int j) const {
  const auto begin = col_idx_.begin() + row_ptr_[i];
  const auto end = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return static_cast<int>(it - col_idx_.begin());
}

void CsrMatrix::add(int i, int j, double value) {
  const int k = find(i, j);
  if (k < 0) throw std::logic_error("CsrMatrix::add: entry outside the pattern");
  values_[k] += value;
}

double CsrMatrix::operator()(int i, int j) const {
  const int k = find(i, j);
  return k < 0 ? 0.0 : values_[k];
}

bool CsrMatrix::has_entry(int i, int j) const { return find(i, j) >= 0; }

Vector CsrMatrix::multiply(const Vector& x) const {
  Vector y = Vector::Zero(rows_);
  for (int i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) sum += values_[k] * x[col_idx_[k]];
    y[i] = sum;
  }
  return y;
}

Vector CsrMatrix::multiply_transpose(const Vector& x) const {
  Vector y = Vector::Zero(cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * x[i];
  return y;
}

Vector CsrMatrix::diagonal() const {
  Vector d = Vector::Zero(std::min(rows_, cols_));
  for (int i = 0; i < d.size(); ++i) d[i] = (*this)(i, i);
  return d;
}

CsrMatrix SparsityPattern::freeze() const {
  std::vector<std::vector<int>> sorted(columns_.size());
  for (size_t i = 0; i < columns_.size(); ++i) {
    sorted[i] = columns_[i];
    std::sort(sorted[i].begin(), sorted[i].end());
    sorted[i].erase(std::unique(sorted[i].begin(), sorted[i].end()), sorted[i].end());
  }
  return CsrMatrix(rows_, cols_, sorted);
}

// Multifrontal LU through UMFPACK. The CSR input is converted once to the
// compressed-column form UMFPACK expects; iterative refinement is disabled
// so each solve is a pair of triangular solves.
struct LuFactorization::Impl {
  int n = 0;
  std::vector<int> col_ptr, row_idx;
  std::vector<double> values;
  double control[UMFPACK_CONTROL];
  void* numeric = nullptr;

  ~Impl() {
    if (numeric) umfpack_di_free_numeric(&numeric);
  }
};

LuFactorization lu_factorize(const CsrMatrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("lu_factorize: matrix not square");
  const int n = A.rows();

  auto impl = std::make_shared<LuFactorization::Impl>();
  impl->n = n;
  impl->col_ptr.assign(n + 1, 0);
  impl->row_idx.resize(A.nnz());
  impl->values.resize(A.nnz());
  for (std::int64_t k = 0; k < A.nnz(); ++k) ++impl->col_ptr[A.col_idx()[k] + 1];
  for (int j = 0; j < n; ++j) impl->col_ptr[j + 1] += impl->col_ptr[j];
  {
    std::vector<int> next(impl->col_ptr.begin(), impl->col_ptr.end() - 1);
    for (int i = 0; i < n; ++i)
      for (int k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) {
        const int dst = next[A.col_idx()[k]]++;
        impl->row_idx[dst] = i;
        impl->values[dst] = A.values()[k];
      }
  }

  umfpack_di_defaults(impl->control);
  impl->control[UMFPACK_IRSTEP] = 0;
  double info[UMFPACK_INFO];
  void* symbolic = nullptr;
  int status = umfpack_di_symbolic(n, n, impl->col_ptr.data(), impl->row_idx.data(),
                                   impl->values.data(), &symbolic, impl->control, info);
  if (status == UMFPACK_OK)
    status = umfpack_di_numeric(impl->col_ptr.data(), impl->row_idx.data(),
                                impl->values.data(), symbolic, &impl->numeric,
                                impl->control, info);
  if (symbolic) umfpack_di_free_symbolic(&symbolic);
  if (status != UMFPACK_OK)
    throw std::runtime_error("lu_factorize: UMFPACK failed with status " +
                             std::to_string(status));

  LuFactorization f;
  f.impl_ = std::move(impl);
  return f;
}

Vector LuFactorization::solve(const Vector& b) const {
  if (!impl_) throw std::logic_error("LuFactorization: empty");
  if (b.size() != impl_->n) throw std::invalid_argument("LuFactorization::solve: size mismatch");
  Vector x(impl_->n);
  double info[UMFPACK_INFO];
  const int status =
      umfpack_di_solve(UMFPACK_A, impl_->col_ptr.data(), impl_->row_idx.data(),
                       impl_->values.data(), x.data(), b.data(), impl_->numeric,
                       impl_->control, info);
  if (status != UMFPACK_OK)
    throw std::runtime_error("LuFactorization::solve: UMFPACK failed");
  return x;
}

int LuFactorization::rows() const { return impl_ ? impl_->n : 0; }

namespace {

// fetch the numeric factor layout: P (diag r) A Q = L U
void extract_factors(const LuFactorization::Impl& impl, std::vector<int>* p,
                     std::vector<int>* q, std::vector<double>* scale) {
  const int n = impl.n;
  int lnz = 0, unz = 0, rows = 0, cols = 0, nz_udiag = 0;
  umfpack_di_get_lunz(&lnz, &unz, &rows, &cols, &nz_udiag, impl.numeric);
  std::vector<int> lp(n + 1), lj(lnz), up(n + 1), ui(unz);
  std::vector<double> lx(lnz), ux(unz), rs(n);
  p->resize(n);
  q->resize(n);
  int do_recip = 0;
  umfpack_di_get_numeric(lp.data(), lj.data(), lx.data(), up.data(), ui.data(),
                         ux.data(), p->data(), q->data(), nullptr, &do_recip,
                         rs.data(), impl.numeric);
  scale->resize(n);
  for (int i = 0; i < n; ++i) (*scale)[i] = do_recip ? rs[i] : 1.0 / rs[i];
}

}  // namespace

std::vector<int> LuFactorization::row_permutation() const {
  std::vector<int> p, q;
  std::vector<double> r;
  extract_factors(*impl_, &p, &q, &r);
  return p;
}

std::vector<int> LuFactorization::col_permutation() const {
  std::vector<int> p, q;
  std::vector<double> r;
  extract_factors(*impl_, &p, &q, &r);
  return q;
}

std::vector<double> LuFactorization::row_scaling() const {
  std::vector<int> p, q;
  std::vector<double> r;
  extract_factors(*impl_, &p, &q, &r);
  return r;
}

Vector LuFactorization::lower_solve(Vector b) const {
  Vector x(impl_->n);
  double info[UMFPACK_INFO];
  umfpack_di_solve(UMFPACK_L, impl_->col_ptr.data(), impl_->row_idx.data(),
                   impl_->values.data(), x.data(), b.data(), impl_->numeric,
                   impl_->control, info);
  return x;
}

Vector LuFactorization::upper_solve(Vector b) const {
  Vector x(impl_->n);
  double info[UMFPACK_INFO];
  umfpack_di_solve(UMFPACK_U, impl_->col_ptr.data(), impl_->row_idx.data(),
                   impl_->values.data(), x.data(), b.data(), impl_->numeric,
                   impl_->control, info);
  return x;
}

SolveResult cg_solve(const LinearOperator& A, const Vector& b,
                     const LinearOperator& precondition, double rel_tol,
                     int max_iterations) {
  const double b_norm = b.norm();
  SolveResult result;
  result.x = Vector::Zero(b.size());
  if (b_norm == 0.0) return result;

  Vector r = b;
  Vector z(b.size()), q(b.size());
  precondition(r, z);
  Vector p = z;
  double rho = r.dot(z);

  for (int it = 1; it <= max_iterations; ++it) {
    A(p, q);
    const double alpha = rho / p.dot(q);
    result.x += alpha * p;
    r -= alpha * q;
    result.iterations = it;
    if (r.norm() <= rel_tol * b_norm) return result;
    precondition(r, z);
    const double rho_new = r.dot(z);
    p = z + (rho_new / rho) * p;
    rho = rho_new;
  }
  throw ConvergenceError("cg_solve: iteration budget exhausted", result.x, result.iterations);
}

SolveResult cg_solve(const CsrMatrix& A, const Vector& b,
                     const LinearOperator& precondition, double rel_tol,
                     int max_iterations) {
  return cg_solve([&A](const Vector& x, Vector& y) { y = A.multiply(x); }, b,
                  precondition, rel_tol, max_iterations);
}

SolveResult fgmres(const LinearOperator& apply_A, const LinearOperator& apply_P_inv,
                   const Vector& b, double rel_tol, int restart, int max_iterations) {
  const int n = static_cast<int>(b.size());
  const double b_norm = b.norm();
  SolveResult result;
  result.x = Vector::Zero(n);
  if (b_norm == 0.0) return result;
  const double target = rel_tol * b_norm;

  Vector w(n);
  std::vector<Vector> v, z;  // Arnoldi basis and preconditioned vectors

  while (true) {
    // residual of the current iterate; restarts re-enter here
    apply_A(result.x, w);
    Vector r = b - w;
    double beta = r.norm();
    if (beta <= target) return result;

    v.assign(1, r / beta);
    z.clear();
    const int m = std::min(restart, max_iterations - result.iterations);
    if (m <= 0)
      throw ConvergenceError("fgmres: iteration budget exhausted", result.x,
                             result.iterations);

    std::vector<std::vector<double>> h(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m), sn(m), g(m + 1, 0.0);
    g[0] = beta;
    int k = 0;

    for (int j = 0; j < m; ++j) {
      z.emplace_back(n);
      apply_P_inv(v[j], z[j]);
      apply_A(z[j], w);
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        h[i][j] = w.dot(v[i]);
        w -= h[i][j] * v[i];
      }
      const double h_next = w.norm();
      h[j + 1][j] = h_next;
      ++result.iterations;
      k = j + 1;

      // apply stored Givens rotations, then generate the new one
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
        h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
        h[i][j] = t;
      }
      const double denom = std::hypot(h[j][j], h[j + 1][j]);
      if (denom == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else {
        cs[j] = h[j][j] / denom;
        sn[j] = h[j + 1][j] / denom;
      }
      h[j][j] = cs[j] * h[j][j] + sn[j] * h[j + 1][j];
      h[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      if (std::abs(g[j + 1]) <= target) break;
      if (h_next == 0.0) break;  // invariant subspace: exact solution below
      if (j + 1 < m) v.push_back(w / h_next);
    }

    // back substitution for the least-squares coefficients
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double sum = g[i];
      for (int j = i + 1; j < k; ++j) sum -= h[i][j] * y[j];
      y[i] = sum / h[i][i];
    }
    for (int i = 0; i < k; ++i) result.x += y[i] * z[i];

    apply_A(result.x, w);
    const double true_res = (b - w).norm();
    if (true_res <= target) return result;
    if (result.iterations >= max_iterations)
      throw ConvergenceError("fgmres: iteration budget exhausted", result.x,
                             result.iterations);
  }
}

void write_matrix_market(const CsrMatrix& A, std::ostream& out) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nnz() << "\n";
  for (int i = 0; i < A.rows(); ++i)
    for (int k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k)
      out << i + 1 << " " << A.col_idx()[k] + 1 << " "
          << format_shortest(A.values()[k]) << "\n";
}

}  // namespace dbf
