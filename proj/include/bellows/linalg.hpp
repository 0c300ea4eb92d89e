#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "bellows/error.hpp"

namespace bellows {

// Dense row-major matrix.  Sizes here are tiny (at most a few dozen rows), so
// everything below favours clarity and genericity over blocking tricks.  The
// scalar is templated: the flex engine runs in double, the certification layer
// reruns the same routines in 50-digit floats.
template <class R>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<R> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, R(0)) {}

  R& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const R& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = R(1);
    return m;
  }
};

template <class R>
std::vector<R> mat_vec(const Mat<R>& m, const std::vector<R>& v) {
  std::vector<R> out(m.rows, R(0));
  for (int i = 0; i < m.rows; ++i) {
    R s(0);
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

template <class R>
Mat<R> transpose(const Mat<R>& m) {
  Mat<R> t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

template <class R>
Mat<R> mat_mul(const Mat<R>& x, const Mat<R>& y) {
  Mat<R> z(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const R& xa = x(i, k);
      if (xa == R(0)) continue;
      for (int j = 0; j < y.cols; ++j) z(i, j) += xa * y(k, j);
    }
  return z;
}

namespace detail {
template <class R>
R hypot2(const R& a, const R& b) {
  using std::sqrt;
  return sqrt(a * a + b * b);
}
}  // namespace detail

// Least-squares solve of A x = b (rows >= cols) by Householder QR with column
// pivoting.  Rank-deficient columns (pivot below rcond * largest pivot) get
// x = 0, i.e. a basic solution.  Returns x; `rank_out` reports the numerical
// rank if non-null.
template <class R>
std::vector<R> qr_least_squares(Mat<R> A, std::vector<R> b,
                                const R& rcond = R(0), int* rank_out = nullptr) {
  const int m = A.rows, n = A.cols;
  require(m >= n, "bad_dimensions", "qr_least_squares needs rows >= cols");
  require(static_cast<int>(b.size()) == m, "bad_dimensions", "rhs size mismatch");

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<R> colnorm2(n, R(0));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) colnorm2[j] += A(i, j) * A(i, j);

  std::vector<R> rdiag(n, R(0));
  using std::abs;
  using std::sqrt;

  for (int k = 0; k < n; ++k) {
    // Pivot: bring the column with the largest remaining norm to position k.
    int p = k;
    R best = colnorm2[k];
    for (int j = k + 1; j < n; ++j)
      if (colnorm2[j] > best) { best = colnorm2[j]; p = j; }
    if (p != k) {
      for (int i = 0; i < m; ++i) std::swap(A(i, k), A(i, p));
      std::swap(colnorm2[k], colnorm2[p]);
      std::swap(perm[k], perm[p]);
    }

    R nrm(0);
    for (int i = k; i < m; ++i) nrm += A(i, k) * A(i, k);
    nrm = sqrt(nrm);
    if (nrm == R(0)) { rdiag[k] = R(0); continue; }
    if (A(k, k) < R(0)) nrm = -nrm;
    for (int i = k; i < m; ++i) A(i, k) /= nrm;
    A(k, k) += R(1);

    // Apply the reflector to the trailing columns and to b.
    for (int j = k + 1; j < n; ++j) {
      R s(0);
      for (int i = k; i < m; ++i) s += A(i, k) * A(i, j);
      s = -s / A(k, k);
      for (int i = k; i < m; ++i) A(i, j) += s * A(i, k);
    }
    {
      R s(0);
      for (int i = k; i < m; ++i) s += A(i, k) * b[i];
      s = -s / A(k, k);
      for (int i = k; i < m; ++i) b[i] += s * A(i, k);
    }
    rdiag[k] = -nrm;

    for (int j = k + 1; j < n; ++j) {
      colnorm2[j] -= A(k, j) * A(k, j);
      if (colnorm2[j] < R(0)) colnorm2[j] = R(0);
    }
  }

  R tol = rcond;
  if (tol == R(0)) tol = R(std::numeric_limits<double>::epsilon() * 64);
  R pivmax(0);
  for (int k = 0; k < n; ++k) pivmax = std::max(pivmax, abs(rdiag[k]));
  int rank = 0;
  for (int k = 0; k < n; ++k) {
    if (abs(rdiag[k]) > tol * pivmax) ++rank; else break;
  }
  if (rank_out) *rank_out = rank;

  std::vector<R> y(n, R(0));
  for (int k = rank - 1; k >= 0; --k) {
    R s = b[k];
    for (int j = k + 1; j < rank; ++j) s -= A(k, j) * y[j];
    y[k] = s / rdiag[k];
  }
  std::vector<R> x(n, R(0));
  for (int k = 0; k < n; ++k) x[perm[k]] = y[k];
  return x;
}

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
// Eigenvalues come back ascending, with matching columns in `vectors`.
template <class R>
struct SymmetricEigen {
  std::vector<R> values;
  Mat<R> vectors;  // column j is the eigenvector for values[j]
};

template <class R>
SymmetricEigen<R> symmetric_eigen(Mat<R> A) {
  const int n = A.rows;
  require(A.rows == A.cols, "bad_dimensions", "symmetric_eigen needs a square matrix");
  Mat<R> V = Mat<R>::identity(n);
  using std::abs;
  using std::sqrt;

  const R eps = std::numeric_limits<R>::epsilon();
  for (int sweep = 0; sweep < 100; ++sweep) {
    R off(0), diag(0);
    for (int i = 0; i < n; ++i) {
      diag += abs(A(i, i));
      for (int j = i + 1; j < n; ++j) off += abs(A(i, j));
    }
    if (off <= eps * (diag + off)) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (abs(A(p, q)) <= eps * eps * (abs(A(p, p)) + abs(A(q, q)) + off)) continue;
        const R theta = (A(q, q) - A(p, p)) / (R(2) * A(p, q));
        R t;
        {
          const R at = abs(theta);
          t = R(1) / (at + sqrt(R(1) + theta * theta));
          if (theta < R(0)) t = -t;
        }
        const R c = R(1) / sqrt(R(1) + t * t);
        const R s = t * c;
        const R tau = s / (R(1) + c);
        const R apq = A(p, q);
        A(p, p) -= t * apq;
        A(q, q) += t * apq;
        A(p, q) = R(0);
        A(q, p) = R(0);
        for (int i = 0; i < n; ++i) {
          if (i != p && i != q) {
            const R aip = A(i, p), aiq = A(i, q);
            A(i, p) = aip - s * (aiq + tau * aip);
            A(p, i) = A(i, p);
            A(i, q) = aiq + s * (aip - tau * aiq);
            A(q, i) = A(i, q);
          }
          const R vip = V(i, p), viq = V(i, q);
          V(i, p) = vip - s * (viq + tau * vip);
          V(i, q) = viq + s * (vip - tau * viq);
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<R> vals(n);
  for (int i = 0; i < n; ++i) vals[i] = A(i, i);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return vals[i] < vals[j]; });

  SymmetricEigen<R> out;
  out.values.resize(n);
  out.vectors = Mat<R>(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = vals[order[j]];
    for (int i = 0; i < n; ++i) out.vectors(i, j) = V(i, order[j]);
  }
  return out;
}

// Singular values of A (ascending), via the eigenvalues of A^T A.  Adequate at
// the sizes and conditioning this library deals with; used for kernel-gap
// diagnostics, not for solving.
template <class R>
std::vector<R> singular_values(const Mat<R>& A) {
  Mat<R> ata = mat_mul(transpose(A), A);
  auto eig = symmetric_eigen(ata);
  using std::sqrt;
  std::vector<R> sv(eig.values.size());
  for (size_t i = 0; i < sv.size(); ++i) {
    R v = eig.values[i];
    if (v < R(0)) v = R(0);
    sv[i] = sqrt(v);
  }
  return sv;
}

// Orthonormal basis (columns) for the near-kernel of A: right singular vectors
// whose singular values fall below `tol` times the largest singular value.
template <class R>
Mat<R> kernel_basis(const Mat<R>& A, const R& tol) {
  Mat<R> ata = mat_mul(transpose(A), A);
  auto eig = symmetric_eigen(ata);
  const int n = A.cols;
  using std::sqrt;
  R smax(0);
  for (const R& v : eig.values) {
    R s = v < R(0) ? R(0) : sqrt(v);
    smax = std::max(smax, s);
  }
  int dim = 0;
  for (const R& v : eig.values) {
    R s = v < R(0) ? R(0) : sqrt(v);
    if (s <= tol * smax) ++dim;
  }
  Mat<R> K(n, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < n; ++i) K(i, j) = eig.vectors(i, j);
  return K;
}

}  // namespace bellows
