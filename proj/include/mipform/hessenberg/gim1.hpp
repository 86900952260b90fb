#pragma once

#include <utility>
#include <vector>

#include "mipform/hessenberg/report.hpp"
#include "mipform/model.hpp"

namespace mipform {

/// Stagewise solver for GI/M/1-type generators.
///
/// Interior quantities do not depend on the stage, so they are grown by one
/// level per stage; only the boundary inverse is redone. Interior index j
/// stands for the level j steps below the truncation edge.
template <typename Scalar>
class Gim1Solver {
 public:
  using scalar_type = Scalar;

  explicit Gim1Solver(Gim1Blocks<Scalar> blocks, InversePolicy policy = InversePolicy::Lu)
      : g_(std::move(blocks)), policy_(policy) {
    if (!g_.A || !g_.B) throw Error(ErrorKind::InvalidInput, "GI/M/1 blocks are missing");
    if (g_.boundary_size <= 0 || g_.interior_size <= 0)
      throw Error(ErrorKind::InvalidInput, "GI/M/1 block sizes must be positive");
    a1_ = g_.a(1);
    b1_ = g_.b(1);
  }

  void advance(Index max_level = -1) {
    (void)max_level;
    const Index s = stage_ + 1;
    if (s == 0) {
      boundary_ = fundamental_block<Scalar>(g_.b(0), policy_);
      ++inverses_;
      levels_ = {boundary_.row(0) / boundary_.row(0).sum()};
      stage_ = 0;
      return;
    }
    grow_interior();  // interior level s - 1 becomes available

    const Index m0 = g_.boundary_size;
    const Index top = s - 1;
    Matrix<Scalar> acc = Matrix<Scalar>::Zero(g_.interior_size, m0);
    const Index first = g_.max_down ? std::max<Index>(0, s - *g_.max_down) : 0;
    for (Index l = first; l <= top; ++l) acc.noalias() += row_[l] * g_.b(l - s);
    Matrix<Scalar> t = g_.b(0);
    t.noalias() += b1_ * acc;
    boundary_ = fundamental_block<Scalar>(t, policy_);
    ++inverses_;

    const RowVector<Scalar> head = boundary_.row(0);
    const Scalar denom = head.sum() + (head * b1_ * u_vec_)(0);
    if (!(denom > Scalar(0))) throw Error(ErrorKind::SingularMatrix, "stage output has no mass");
    const RowVector<Scalar> hb = head * b1_;
    levels_.assign(static_cast<std::size_t>(s + 1), {});
    levels_[0] = head / denom;
    for (Index k = 1; k <= s; ++k) levels_[k] = (hb * row_[s - k]) / denom;
    stage_ = s;
  }

  Index stage() const { return stage_; }
  Index inverse_count() const { return inverses_; }
  const std::vector<RowVector<Scalar>>& levels() const { return levels_; }
  /// Interior inverses computed so far (never recomputed).
  const std::vector<Matrix<Scalar>>& interior_inverses() const { return diag_; }
  const Matrix<Scalar>& boundary_inverse() const { return boundary_; }

 private:
  void grow_interior() {
    const Index k = static_cast<Index>(diag_.size());
    const Index m = g_.interior_size;
    Matrix<Scalar> t = g_.a(0);
    if (k > 0) {
      Matrix<Scalar> acc = Matrix<Scalar>::Zero(m, m);
      const Index first = g_.max_down ? std::max<Index>(0, k - *g_.max_down) : 0;
      for (Index l = first; l < k; ++l) acc.noalias() += row_[l] * g_.a(l - k);
      t.noalias() += a1_ * acc;
    }
    Matrix<Scalar> u = fundamental_block<Scalar>(t, policy_);
    ++inverses_;
    if (k > 0) {
      const Matrix<Scalar> step = u * a1_;
      for (Index l = 0; l < k; ++l) row_[l] = (step * row_[l]).eval();
      u_vec_ = (u * (Vector<Scalar>::Ones(m) + a1_ * u_vec_)).eval();
    } else {
      u_vec_ = u.rowwise().sum();
    }
    row_.push_back(u);
    diag_.push_back(std::move(u));
  }

  Gim1Blocks<Scalar> g_;
  InversePolicy policy_;
  Matrix<Scalar> a1_;
  Matrix<Scalar> b1_;
  Index stage_ = -1;
  Index inverses_ = 0;
  std::vector<Matrix<Scalar>> diag_;  // interior U*_k
  std::vector<Matrix<Scalar>> row_;   // interior U*_{k,l} for the newest k
  Vector<Scalar> u_vec_;              // interior u*_k for the newest k
  Matrix<Scalar> boundary_;
  std::vector<RowVector<Scalar>> levels_;
};

template <typename Scalar>
SolveResult<Scalar> gim1_solve(const Gim1Blocks<Scalar>& blocks, double epsilon, Index max_level,
                               InversePolicy policy = InversePolicy::Lu) {
  Gim1Solver<Scalar> solver(blocks, policy);
  return drive(solver, epsilon, max_level);
}

}  // namespace mipform
