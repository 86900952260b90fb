#pragma once

#include <algorithm>
#include <set>
#include <utility>
#include <variant>
#include <vector>

#include "mipform/matrix.hpp"

namespace mipform {

/// How the probability mass escaping a truncation is returned.
template <typename Scalar>
struct AugmentationSpec {
  struct UnitColumn {
    Index nu;
  };
  struct UniformLastLevel {};
  struct Custom {
    RowVector<Scalar> weights;
  };

  std::variant<UnitColumn, UniformLastLevel, Custom> kind = UnitColumn{0};

  static AugmentationSpec unit_column(Index nu) { return {UnitColumn{nu}}; }
  static AugmentationSpec uniform_last_level() { return {UniformLastLevel{}}; }
  static AugmentationSpec custom(RowVector<Scalar> w) { return {Custom{std::move(w)}}; }

  /// The 1 x n_states probability vector; last_level_size is m_s of the last
  /// level of the truncation (needed only for UniformLastLevel).
  RowVector<Scalar> resolve(Index n_states, Index last_level_size = 1) const {
    RowVector<Scalar> alpha = RowVector<Scalar>::Zero(n_states);
    if (const auto* u = std::get_if<UnitColumn>(&kind)) {
      if (u->nu < 0 || u->nu >= n_states)
        throw Error(ErrorKind::InvalidAlpha, "unit column " + std::to_string(u->nu) +
                                                 " outside a truncation of " +
                                                 std::to_string(n_states) + " states");
      alpha(u->nu) = Scalar(1);
    } else if (std::holds_alternative<UniformLastLevel>(kind)) {
      if (last_level_size <= 0 || last_level_size > n_states)
        throw Error(ErrorKind::InvalidAlpha, "last level size does not fit the truncation");
      alpha.tail(last_level_size).setConstant(Scalar(1) / Scalar(last_level_size));
    } else {
      const auto& w = std::get<Custom>(kind).weights;
      if (w.size() != n_states)
        throw Error(ErrorKind::InvalidAlpha, "custom weights have length " +
                                                 std::to_string(w.size()) + ", expected " +
                                                 std::to_string(n_states));
      if (!w.allFinite() || w.minCoeff() < Scalar(0))
        throw Error(ErrorKind::InvalidAlpha, "custom weights must be finite and nonnegative");
      if (std::abs(w.sum() - Scalar(1)) > Scalar(1e-12))
        throw Error(ErrorKind::InvalidAlpha, "custom weights must sum to one");
      alpha = w;
    }
    return alpha;
  }
};

template <typename Scalar>
struct TruncationSolution {
  Index n = 0;  // truncation order: states 0..n
  Matrix<Scalar> fundamental;
  Matrix<Scalar> normalized_fundamental;
  RowVector<Scalar> pi_bar;
  RowVector<Scalar> beta;
};

namespace detail {

template <typename Scalar>
void require_square(const Matrix<Scalar>& q) {
  if (q.rows() != q.cols() || q.rows() == 0)
    throw Error(ErrorKind::InvalidInput, "truncated generator must be square and nonempty");
}

/// Sum of a row in storage order, so that equal rows give bitwise equal sums.
template <typename Scalar, typename Row>
Scalar ordered_sum(const Row& r) {
  Scalar s = 0;
  for (Index j = 0; j < r.size(); ++j) s += r(j);
  return s;
}

}  // namespace detail

/// Qn - (Qn e) alpha: the escaping rate of each row is redistributed by alpha.
template <typename Scalar>
Matrix<Scalar> augmented_generator(const Matrix<Scalar>& qn, const RowVector<Scalar>& alpha) {
  detail::require_square(qn);
  if (alpha.size() != qn.rows())
    throw Error(ErrorKind::InvalidAlpha, "alpha length does not match the truncation");
  if (alpha.minCoeff() < Scalar(0)) throw Error(ErrorKind::InvalidAlpha, "alpha has negative mass");
  const Vector<Scalar> escape = qn.rowwise().sum();
  return qn - escape * alpha;
}

template <typename Scalar>
Matrix<Scalar> augmented_generator(const Matrix<Scalar>& qn, const AugmentationSpec<Scalar>& spec,
                                   Index last_level_size = 1) {
  detail::require_square(qn);
  return augmented_generator<Scalar>(qn, spec.resolve(qn.rows(), last_level_size));
}

/// alpha (-Qn)^{-1} / alpha (-Qn)^{-1} e, with a single transposed solve.
template <typename Scalar>
RowVector<Scalar> augmented_stationary(const Matrix<Scalar>& qn, const RowVector<Scalar>& alpha) {
  detail::require_square(qn);
  if (alpha.size() != qn.rows())
    throw Error(ErrorKind::InvalidAlpha, "alpha length does not match the truncation");
  RowVector<Scalar> x = negate_solve_left<Scalar>(qn, alpha);
  x = x.cwiseMax(Scalar(0));
  const Scalar mass = x.sum();
  if (!(mass > Scalar(0))) throw Error(ErrorKind::SingularMatrix, "alpha has no mass after solve");
  return x / mass;
}

/// Full fundamental-matrix view of a truncation.
template <typename Scalar>
TruncationSolution<Scalar> solve_truncation(const Matrix<Scalar>& qn,
                                            const AugmentationSpec<Scalar>& spec,
                                            Index last_level_size = 1) {
  detail::require_square(qn);
  const Index states = qn.rows();
  const RowVector<Scalar> alpha = spec.resolve(states, last_level_size);

  TruncationSolution<Scalar> sol;
  sol.n = states - 1;
  sol.fundamental = negate_invert<Scalar>(qn);

  Vector<Scalar> row_sums(states);
  for (Index i = 0; i < states; ++i)
    row_sums(i) = detail::ordered_sum<Scalar>(sol.fundamental.row(i));
  if (!(row_sums.minCoeff() > Scalar(0)))
    throw Error(ErrorKind::SingularMatrix, "fundamental matrix has a zero row");
  sol.normalized_fundamental.resize(states, states);
  for (Index i = 0; i < states; ++i)
    sol.normalized_fundamental.row(i) = sol.fundamental.row(i) / row_sums(i);

  // Accumulating alpha X entry by entry keeps a unit alpha exact.
  RowVector<Scalar> weighted = RowVector<Scalar>::Zero(states);
  for (Index i = 0; i < states; ++i)
    if (alpha(i) != Scalar(0)) weighted += alpha(i) * sol.fundamental.row(i);
  const Scalar mass = detail::ordered_sum<Scalar>(weighted);
  sol.pi_bar = weighted / mass;

  RowVector<Scalar> beta = alpha.cwiseProduct(row_sums.transpose());
  sol.beta = beta / beta.sum();
  return sol;
}

/// Row nu of the normalized fundamental matrix: the stationary vector of the
/// truncation augmented in column nu.
template <typename Scalar>
RowVector<Scalar> column_augmented_stationary(const Matrix<Scalar>& qn, Index nu) {
  detail::require_square(qn);
  if (nu < 0 || nu >= qn.rows())
    throw Error(ErrorKind::IndexOutOfRange, "column " + std::to_string(nu) + " is outside 0.." +
                                                std::to_string(qn.rows() - 1));
  return solve_truncation<Scalar>(qn, AugmentationSpec<Scalar>::unit_column(nu)).pi_bar;
}

inline constexpr double kZeroMassThreshold = 1e-14;

/// alpha (-Qn)^{-1} restricted to the states in `subset`, normalized.
template <typename Scalar>
RowVector<Scalar> conditional_measure(const Matrix<Scalar>& qn, const RowVector<Scalar>& alpha,
                                      const std::vector<Index>& subset) {
  detail::require_square(qn);
  if (subset.empty()) throw Error(ErrorKind::InvalidInput, "state set is empty");
  for (Index i : subset)
    if (i < 0 || i >= qn.rows())
      throw Error(ErrorKind::IndexOutOfRange, "state " + std::to_string(i) + " is outside 0.." +
                                                  std::to_string(qn.rows() - 1));
  if (alpha.size() != qn.rows())
    throw Error(ErrorKind::InvalidAlpha, "alpha length does not match the truncation");
  const RowVector<Scalar> x = negate_solve_left<Scalar>(qn, alpha).cwiseMax(Scalar(0));
  RowVector<Scalar> mu(static_cast<Index>(subset.size()));
  for (std::size_t j = 0; j < subset.size(); ++j) mu(static_cast<Index>(j)) = x(subset[j]);
  const Scalar mass = mu.sum();
  if (!(mass >= Scalar(kZeroMassThreshold)))
    throw Error(ErrorKind::ZeroMass, "the state set carries no mass under alpha");
  return mu / mass;
}

template <typename Scalar>
RowVector<Scalar> conditional_measure(const Matrix<Scalar>& qn, const AugmentationSpec<Scalar>& spec,
                                      const std::vector<Index>& subset,
                                      Index last_level_size = 1) {
  detail::require_square(qn);
  return conditional_measure<Scalar>(qn, spec.resolve(qn.rows(), last_level_size), subset);
}

/// Solves x Qbar = 0, x e = 1 directly: the last balance equation is
/// replaced by the normalization.
template <typename Scalar>
RowVector<Scalar> oracle_stationary(const Matrix<Scalar>& qbar) {
  detail::require_square(qbar);
  const Index n = qbar.rows();
  Matrix<Scalar> a = qbar;
  a.col(n - 1).setOnes();
  RowVector<Scalar> rhs = RowVector<Scalar>::Zero(n);
  rhs(n - 1) = Scalar(1);
  RowVector<Scalar> x = solve_left<Scalar>(a, rhs);
  if (x.minCoeff() < Scalar(-1e-12))
    throw Error(ErrorKind::InvalidInput, "generator does not have a single closed class");
  return x.cwiseMax(Scalar(0));
}

}  // namespace mipform
