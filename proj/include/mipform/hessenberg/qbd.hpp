#pragma once

#include <vector>

#include "mipform/model.hpp"
#include "mipform/truncation.hpp"

namespace mipform {

namespace detail {

inline void require_tridiagonal(StructureClass cls) {
  if (cls != StructureClass::Tridiagonal)
    throw Error(ErrorKind::IncompatibleStructure,
                std::string("backward R recursion needs a block-tridiagonal model, got ") +
                    to_string(cls));
}

/// R^{(k)} for k = 1..top with R^{(top+1)} = O; element k-1 holds R^{(k)}.
template <typename Scalar>
std::vector<Matrix<Scalar>> backward_r(const BlockGenerator<Scalar>& model, Index top) {
  model.check_level(top);
  std::vector<Matrix<Scalar>> r(static_cast<std::size_t>(top));
  Matrix<Scalar> next;  // R^{(k+1)}
  for (Index k = top; k >= 1; --k) {
    Matrix<Scalar> t = model.block(k, k);
    if (k < top) t.noalias() += next * model.block(k + 1, k);
    next = model.block(k - 1, k) * negate_invert<Scalar>(t);
    r[static_cast<std::size_t>(k - 1)] = next;
  }
  return r;
}

}  // namespace detail

/// R_L^{(k)}, k = 1..N, from the backward recursion started L levels above N.
/// L = 0 gives R^{(N)} = Q_{N-1,N}(-Q_{N,N})^{-1}.
template <typename Scalar>
std::vector<Matrix<Scalar>> qbd_backward_r(const BlockGenerator<Scalar>& model, Index n, Index l) {
  if (n < 1 || l < 0) throw Error(ErrorKind::InvalidInput, "need N >= 1 and L >= 0");
  detail::require_tridiagonal(classify(model));
  auto all = detail::backward_r(model, n + l);
  all.resize(static_cast<std::size_t>(n));
  return all;
}

/// Level probabilities 0..N+L from pi_0 (boundary balance) and
/// pi_k = pi_{k-1} R^{(k)}, normalized over those levels.
template <typename Scalar>
std::vector<RowVector<Scalar>> qbd_r_stationary(const BlockGenerator<Scalar>& model, Index n,
                                                Index l) {
  if (n < 1 || l < 0) throw Error(ErrorKind::InvalidInput, "need N >= 1 and L >= 0");
  detail::require_tridiagonal(classify(model));
  const Index top = n + l;
  const auto r = detail::backward_r(model, top);
  const Matrix<Scalar> censored = model.block(0, 0) + r[0] * model.block(1, 0);
  std::vector<RowVector<Scalar>> levels{oracle_stationary<Scalar>(censored)};
  Scalar mass = levels[0].sum();
  for (Index k = 1; k <= top; ++k) {
    levels.push_back(levels.back() * r[static_cast<std::size_t>(k - 1)]);
    mass += levels.back().sum();
  }
  for (auto& v : levels) v /= mass;
  return levels;
}

}  // namespace mipform
