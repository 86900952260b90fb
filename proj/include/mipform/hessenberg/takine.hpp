#pragma once

#include <vector>

#include "mipform/hessenberg/upper.hpp"

namespace mipform {

enum class TakineVariant { RowAverage, MuForm };

/// Estimate of the distribution conditioned on levels 0..N from stage s of
/// the upper solver: a level-N vector (row-averaged U_{s,N}, or the
/// normalized column sums of U*_{s,N}) is pushed down by U_{N,k} and the
/// N + 1 pieces are normalized jointly.
template <typename Scalar>
std::vector<RowVector<Scalar>> takine_conditional(const UpperSolver<Scalar>& solver, Index n,
                                                  TakineVariant variant) {
  const Index s = solver.stage();
  if (n < 0 || s <= n)
    throw Error(ErrorKind::InvalidInput, "conditional estimate needs 0 <= N < s");
  RowVector<Scalar> top;
  if (variant == TakineVariant::MuForm) {
    top = solver.last_block_row()[static_cast<std::size_t>(n)].colwise().sum();
    const Scalar mass = top.sum();
    if (!(mass > Scalar(0)))
      throw Error(ErrorKind::ZeroMass, "U*_{s,N} has no mass at s = " + std::to_string(s));
    top /= mass;
  } else {
    const Matrix<Scalar> u = solver.transfer(s, n);
    const Vector<Scalar> rows = u.rowwise().sum();
    for (Index i = 0; i < rows.size(); ++i)
      if (!(rows(i) > Scalar(0)))
        throw Error(ErrorKind::ZeroRow, "row " + std::to_string(i) + " of U_{s,N} vanishes at s = " +
                                            std::to_string(s));
    top = (rows.cwiseInverse().asDiagonal() * u).colwise().sum() / Scalar(u.rows());
  }

  std::vector<RowVector<Scalar>> x(static_cast<std::size_t>(n + 1));
  x[static_cast<std::size_t>(n)] = top;
  Matrix<Scalar> push = Matrix<Scalar>::Identity(top.size(), top.size());
  const auto& model = solver.model();
  const auto& diag = solver.level_inverses();
  for (Index k = n - 1; k >= 0; --k) {
    push = (push * model.block(k + 1, k) * diag[static_cast<std::size_t>(k)]).eval();
    x[static_cast<std::size_t>(k)] = top * push;
  }
  Scalar mass = 0;
  for (const auto& v : x) mass += v.sum();
  for (auto& v : x) v /= mass;
  return x;
}

template <typename Scalar>
std::vector<RowVector<Scalar>> takine_conditional(const BlockGenerator<Scalar>& model, Index n,
                                                  Index s, TakineVariant variant,
                                                  InversePolicy policy = InversePolicy::Lu) {
  if (n < 0 || s <= n)
    throw Error(ErrorKind::InvalidInput, "conditional estimate needs 0 <= N < s");
  UpperSolver<Scalar> solver(model, AugmentationSpec<Scalar>::uniform_last_level(), policy);
  while (solver.stage() < s) solver.advance();
  return takine_conditional(solver, n, variant);
}

}  // namespace mipform
