#pragma once

// Dense kernel shared by every solver: storage aliases, partial-pivoting LU,
// fundamental-matrix inversion and the Le Boudec doubling inverse.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mipform/error.hpp"

namespace mipform {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using RowVectorXd = RowVector<double>;
using VectorXd = Vector<double>;

/// Relative pivot threshold: a pivot below this times its row scale is singular.
template <typename Scalar>
inline constexpr Scalar kPivotThreshold = Scalar(1e-14);
/// Absolute tolerance for sign and row-sum checks on Q-matrices.
template <typename Scalar>
inline constexpr Scalar kQMatrixTolerance = Scalar(1e-12);
/// Negative entries of a fundamental matrix up to this (relative) size are roundoff.
template <typename Scalar>
inline constexpr Scalar kClampTolerance = Scalar(1e-12);

/// Maximum absolute row sum.
template <typename Derived>
typename Derived::RealScalar norm_inf(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// l1 norm of a row vector (twice the total-variation distance convention
/// used throughout: ||a - b|| = sum_j |a(j) - b(j)|).
template <typename Derived>
typename Derived::RealScalar tv_norm(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseAbs().sum();
}

/// ||a - b|| with the shorter vector extended by zeros.
template <typename Scalar>
Scalar tv_distance(const RowVector<Scalar>& a, const RowVector<Scalar>& b) {
  const Index common = std::min(a.size(), b.size());
  Scalar d = (a.head(common) - b.head(common)).cwiseAbs().sum();
  if (a.size() > common) d += a.tail(a.size() - common).cwiseAbs().sum();
  if (b.size() > common) d += b.tail(b.size() - common).cwiseAbs().sum();
  return d;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// LU factorization with partial pivoting, P A = L U.
///
/// Pivot candidates are compared by magnitude; a chosen pivot smaller than
/// kPivotThreshold times the largest entry of its original row raises
/// SingularMatrix. The factorization is kept so that both A X = B and
/// A^T X = B can be solved without refactoring.
template <typename Scalar>
class PartialPivLu {
 public:
  explicit PartialPivLu(const Matrix<Scalar>& a) : lu_(a), perm_(a.rows()) {
    using std::abs;
    if (a.rows() != a.cols())
      throw Error(ErrorKind::InvalidInput, "LU requires a square matrix, got " +
                                               std::to_string(a.rows()) + "x" +
                                               std::to_string(a.cols()));
    if (!a.allFinite()) throw Error(ErrorKind::InvalidInput, "LU input has non-finite entries");
    const Index n = a.rows();
    Vector<Scalar> scale = a.cwiseAbs().rowwise().maxCoeff();
    for (Index i = 0; i < n; ++i) perm_[i] = i;

    for (Index k = 0; k < n; ++k) {
      Index pivot = k;
      lu_.col(k).tail(n - k).cwiseAbs().maxCoeff(&pivot);
      pivot += k;
      const Scalar magnitude = abs(lu_(pivot, k));
      const Scalar row_scale = scale(pivot);
      if (!(magnitude > kPivotThreshold<Scalar> * row_scale) || row_scale == Scalar(0))
        throw Error(ErrorKind::SingularMatrix,
                    "pivot " + std::to_string(k) + " is numerically zero");
      if (pivot != k) {
        lu_.row(k).swap(lu_.row(pivot));
        std::swap(perm_[k], perm_[pivot]);
        std::swap(scale(k), scale(pivot));
      }
      const Index rest = n - k - 1;
      if (rest == 0) continue;
      lu_.col(k).tail(rest) /= lu_(k, k);
      lu_.bottomRightCorner(rest, rest).noalias() -=
          lu_.col(k).tail(rest) * lu_.row(k).tail(rest);
    }
  }

  Index size() const { return lu_.rows(); }

  /// X with A X = B.
  Matrix<Scalar> solve(const Matrix<Scalar>& b) const {
    check_rhs(b.rows());
    const Index n = size();
    Matrix<Scalar> x(n, b.cols());
    for (Index i = 0; i < n; ++i) x.row(i) = b.row(perm_[i]);
    lu_.template triangularView<Eigen::UnitLower>().solveInPlace(x);
    lu_.template triangularView<Eigen::Upper>().solveInPlace(x);
    return finite_or_throw(std::move(x));
  }

  /// X with A^T X = B.
  Matrix<Scalar> solve_transposed(const Matrix<Scalar>& b) const {
    check_rhs(b.rows());
    const Index n = size();
    Matrix<Scalar> z = b;
    lu_.template triangularView<Eigen::Upper>().transpose().solveInPlace(z);
    lu_.template triangularView<Eigen::UnitLower>().transpose().solveInPlace(z);
    Matrix<Scalar> x(n, b.cols());
    for (Index i = 0; i < n; ++i) x.row(perm_[i]) = z.row(i);
    return finite_or_throw(std::move(x));
  }

  /// Row vector y with y A = c.
  RowVector<Scalar> solve_left(const RowVector<Scalar>& c) const {
    return solve_transposed(c.transpose()).transpose();
  }

  Matrix<Scalar> inverse() const { return solve(Matrix<Scalar>::Identity(size(), size())); }

 private:
  void check_rhs(Index rows) const {
    if (rows != size())
      throw Error(ErrorKind::InvalidInput, "right-hand side has " + std::to_string(rows) +
                                               " rows, expected " + std::to_string(size()));
  }

  static Matrix<Scalar> finite_or_throw(Matrix<Scalar> x) {
    if (!x.allFinite()) throw Error(ErrorKind::SingularMatrix, "solution overflowed");
    return x;
  }

  Matrix<Scalar> lu_;
  std::vector<Index> perm_;
};

template <typename Scalar>
Matrix<Scalar> lu_solve(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  return PartialPivLu<Scalar>(a).solve(b);
}

template <typename Scalar>
Matrix<Scalar> inverse(const Matrix<Scalar>& a) {
  return PartialPivLu<Scalar>(a).inverse();
}

/// Row vector y with y A = c, factoring A^T.
///
/// Negated generators are row diagonally dominant, so their transposes are
/// column diagonally dominant and partial pivoting keeps the diagonal. Row
/// swaps on A itself would cancel the small escape rates and lose the
/// solution once the truncation has a few dozen levels.
template <typename Scalar>
RowVector<Scalar> solve_left(const Matrix<Scalar>& a, const RowVector<Scalar>& c) {
  return PartialPivLu<Scalar>(a.transpose()).solve(c.transpose()).transpose();
}

/// Elimination for A = -T with T a transient Q-matrix, in the style of
/// Grassmann, Taksar and Heyman.
///
/// A is stored by its off-diagonal magnitudes and its row slacks (the escape
/// rates -T e). Each pivot is rebuilt as off-diagonal mass plus slack, and
/// the Schur complement updates only add nonnegative terms, so the factors
/// and every solve with a nonnegative right-hand side are free of
/// cancellation. No pivoting is needed: A is a row diagonally dominant
/// M-matrix. A pivot below kPivotThreshold times its original row scale
/// means T has a closed class, and SingularMatrix is raised.
template <typename Scalar>
class TransientLu {
 public:
  explicit TransientLu(const Matrix<Scalar>& t) {
    check_input(t);
    factor(t, (-t.rowwise().sum()).cwiseMax(Scalar(0)));
  }

  /// Variant with the escape rates supplied by the caller; the diagonal of t
  /// is ignored. Useful when the escape rates are known more accurately than
  /// the row sums of t would give them.
  TransientLu(const Matrix<Scalar>& t, const Vector<Scalar>& escape) {
    check_input(t);
    if (escape.size() != t.rows() || !escape.allFinite() || escape.minCoeff() < Scalar(0))
      throw Error(ErrorKind::InvalidInput, "escape rates must be finite, nonnegative, one per row");
    factor(t, escape);
  }

  Index size() const { return off_.rows(); }

  /// X with A X = B.
  Matrix<Scalar> solve(const Matrix<Scalar>& b) const {
    check_rhs(b.rows());
    const Index n = size();
    Matrix<Scalar> x = b;
    for (Index i = 1; i < n; ++i)  // L y = b, L unit lower with entries -l(i,j)
      for (Index j = 0; j < i; ++j)
        if (off_(i, j) != Scalar(0)) x.row(i) += off_(i, j) * x.row(j);
    for (Index i = n - 1; i >= 0; --i) {  // U x = y, U(i,j) = -|A(i,j)| above the diagonal
      for (Index j = i + 1; j < n; ++j)
        if (off_(i, j) != Scalar(0)) x.row(i) += off_(i, j) * x.row(j);
      x.row(i) /= pivots_(i);
    }
    return x;
  }

  /// Row vector y with y A = c.
  RowVector<Scalar> solve_left(const RowVector<Scalar>& c) const {
    check_rhs(c.size());
    const Index n = size();
    RowVector<Scalar> y = c;
    for (Index j = 0; j < n; ++j) {  // z U = c
      for (Index i = 0; i < j; ++i)
        if (off_(i, j) != Scalar(0)) y(j) += off_(i, j) * y(i);
      y(j) /= pivots_(j);
    }
    for (Index j = n - 2; j >= 0; --j)  // y L = z
      for (Index i = j + 1; i < n; ++i)
        if (off_(i, j) != Scalar(0)) y(j) += off_(i, j) * y(i);
    return y;
  }

  Matrix<Scalar> inverse() const { return solve(Matrix<Scalar>::Identity(size(), size())); }

 private:
  static void check_input(const Matrix<Scalar>& t) {
    if (t.rows() != t.cols() || t.rows() == 0)
      throw Error(ErrorKind::InvalidInput, "transient factorization needs a nonempty square matrix");
    if (!t.allFinite()) throw Error(ErrorKind::InvalidInput, "non-finite entries");
  }

  // A is held as off-diagonal magnitudes plus slack(i) = A(i,i) - sum_j |A(i,j)|.
  void factor(const Matrix<Scalar>& t, Vector<Scalar> slack) {
    const Index n = t.rows();
    off_ = t.cwiseMax(Scalar(0));
    off_.diagonal().setZero();
    Vector<Scalar> scale = off_.rowwise().sum() + slack;
    pivots_.resize(n);
    for (Index k = 0; k < n; ++k) {
      const Index rest = n - k - 1;
      const Scalar pivot = off_.row(k).tail(rest).sum() + slack(k);
      if (!(pivot > kPivotThreshold<Scalar> * scale(k)))
        throw Error(ErrorKind::SingularMatrix,
                    "pivot " + std::to_string(k) + " vanishes: the block has a closed class");
      pivots_(k) = pivot;
      if (rest == 0) continue;
      // Multipliers l(i) = |A(i,k)| / pivot, stored in column k of off_.
      off_.col(k).tail(rest) /= pivot;
      for (Index i = k + 1; i < n; ++i) {
        const Scalar l = off_(i, k);
        if (l == Scalar(0)) continue;
        // Row i gains l * |A(k,j)| on the off-diagonals and l * slack(k) in slack.
        for (Index j = k + 1; j < n; ++j)
          if (j != i) off_(i, j) += l * off_(k, j);
        slack(i) += l * slack(k);
      }
    }
  }

  void check_rhs(Index rows) const {
    if (rows != size())
      throw Error(ErrorKind::InvalidInput, "right-hand side has " + std::to_string(rows) +
                                               " rows, expected " + std::to_string(size()));
  }

  Matrix<Scalar> off_;  // strictly lower: multipliers; strictly upper: |U(i,j)|
  Vector<Scalar> pivots_;
};

/// Replaces roundoff-sized negatives of a theoretically nonnegative matrix by
/// zero. Negatives larger than kClampTolerance (relative to max(1, max|x|))
/// mean the input was not what the caller claimed.
template <typename Scalar>
void clamp_nonnegative(Matrix<Scalar>& x, const char* what) {
  const Scalar scale = std::max(Scalar(1), x.cwiseAbs().maxCoeff());
  const Scalar floor = -kClampTolerance<Scalar> * scale;
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) {
      Scalar& v = x(i, j);
      if (v < Scalar(0)) {
        if (v < floor)
          throw Error(ErrorKind::InvalidInput,
                      std::string(what) + " has a negative entry beyond roundoff");
        v = Scalar(0);
      }
    }
}


/// Nonnegative off-diagonals and row sums <= tol (both up to tol).
template <typename Scalar>
bool is_q_matrix(const Matrix<Scalar>& t, Scalar tol = kQMatrixTolerance<Scalar>) {
  if (t.rows() != t.cols()) return false;
  for (Index i = 0; i < t.rows(); ++i) {
    Scalar sum = 0;
    for (Index j = 0; j < t.cols(); ++j) {
      if (i != j && t(i, j) < -tol) return false;
      sum += t(i, j);
    }
    if (sum > tol) return false;
  }
  return true;
}

/// Sets each diagonal entry of t to minus its off-diagonal row sum minus the
/// given escape rate, so that -t e = escape up to rounding.
template <typename Scalar>
void set_diagonal_from_escape(Matrix<Scalar>& t, const Vector<Scalar>& escape) {
  for (Index i = 0; i < t.rows(); ++i) {
    Scalar off = 0;
    for (Index j = 0; j < t.cols(); ++j)
      if (j != i) off += t(i, j);
    t(i, i) = -(off + escape(i));
  }
}

/// (-Q)^{-1} for a transient Q-matrix Q, i.e. its fundamental matrix.
/// Q-matrices go through TransientLu; anything else falls back to
/// partial-pivoting LU of -Q^T (see solve_left) followed by the clamp.
template <typename Scalar>
Matrix<Scalar> negate_invert(const Matrix<Scalar>& q) {
  if (q.rows() == q.cols() && q.allFinite() && is_q_matrix<Scalar>(q))
    return TransientLu<Scalar>(q).inverse();
  Matrix<Scalar> x = inverse<Scalar>(Matrix<Scalar>(-q.transpose())).transpose();
  clamp_nonnegative(x, "fundamental matrix");
  return x;
}

/// Row vector y with y (-Q) = c.
template <typename Scalar>
RowVector<Scalar> negate_solve_left(const Matrix<Scalar>& q, const RowVector<Scalar>& c) {
  if (q.rows() == q.cols() && q.allFinite() && is_q_matrix<Scalar>(q) && c.minCoeff() >= Scalar(0))
    return TransientLu<Scalar>(q).solve_left(c);
  return solve_left<Scalar>(Matrix<Scalar>(-q), c);
}

/// State of the Le Boudec doubling recursion for (I - P)^{-1}, where
/// P = I + T / theta is the uniformized version of a transient Q-matrix T:
///   V_0 = P,  V_{n+1} = V_n^2,  W_0 = I,  W_{n+1} = (I + V_n) W_n,
/// so that W_n = sum_{m < 2^n} P^m.
template <typename Scalar>
class LeBoudecIteration {
 public:
  explicit LeBoudecIteration(const Matrix<Scalar>& t) {
    if (t.rows() != t.cols() || t.rows() == 0)
      throw Error(ErrorKind::InvalidInput, "Le Boudec inverse needs a nonempty square matrix");
    if (!t.allFinite()) throw Error(ErrorKind::InvalidInput, "non-finite entries");
    if (!is_q_matrix<Scalar>(t))
      throw Error(ErrorKind::InvalidInput,
                  "matrix has a negative off-diagonal entry or a positive row sum");
    theta_ = t.diagonal().cwiseAbs().maxCoeff();
    if (!(theta_ > Scalar(0)))
      throw Error(ErrorKind::InvalidInput, "zero diagonal: matrix is not transient");
    const Index m = t.rows();
    v_ = Matrix<Scalar>::Identity(m, m) + t / theta_;
    v_ = v_.cwiseMax(Scalar(0));
    w_ = Matrix<Scalar>::Identity(m, m);
  }

  void step() {
    Matrix<Scalar> next_w = w_ + v_ * w_;
    w_ = std::move(next_w);
    v_ = (v_ * v_).eval();
    ++n_;
  }

  const Matrix<Scalar>& V() const { return v_; }
  const Matrix<Scalar>& W() const { return w_; }
  int n() const { return n_; }
  Scalar theta() const { return theta_; }

 private:
  Matrix<Scalar> v_;
  Matrix<Scalar> w_;
  int n_ = 0;
  Scalar theta_ = 0;
};

inline constexpr int kLeBoudecMaxDoublings = 64;

/// (-T)^{-1} as theta^{-1} W_n, doubling until ||W_{n+1} - W_n||_inf < tol * theta.
template <typename Scalar>
Matrix<Scalar> leboudec_inverse(const Matrix<Scalar>& t, Scalar tol) {
  if (!(tol > Scalar(0))) throw Error(ErrorKind::InvalidInput, "tolerance must be positive");
  LeBoudecIteration<Scalar> it(t);
  while (true) {
    if (it.n() >= kLeBoudecMaxDoublings)
      throw Error(ErrorKind::NonConvergence,
                  "Le Boudec recursion did not settle within 64 doublings");
    Matrix<Scalar> previous = it.W();
    it.step();
    if (norm_inf(it.W() - previous) < tol * it.theta()) break;
  }
  if (!it.W().allFinite()) throw Error(ErrorKind::NonConvergence, "partial sums diverged");
  return it.W() / it.theta();
}

/// Which routine computes the inner block inverses of the stage recursions.
enum class InversePolicy { Lu, LeBoudec };

/// (-T)^{-1} for a transient Q-matrix block T under the chosen policy.
template <typename Scalar>
Matrix<Scalar> fundamental_block(const Matrix<Scalar>& t, InversePolicy policy,
                                 Scalar leboudec_tol = Scalar(1e-15)) {
  if (policy == InversePolicy::LeBoudec) return leboudec_inverse<Scalar>(t, leboudec_tol);
  return negate_invert<Scalar>(t);
}

}  // namespace mipform
