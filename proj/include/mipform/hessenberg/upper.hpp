#pragma once

#include <utility>
#include <vector>

#include "mipform/hessenberg/report.hpp"
#include "mipform/model.hpp"
#include "mipform/truncation.hpp"

namespace mipform {

/// Stagewise solver for upper block-Hessenberg generators.
///
/// Stage s holds the last block row U*_{s,k} of the fundamental matrix of the
/// level-s truncation and its row sums u*_s; one new block inverse U*_s is
/// needed per stage. The per-level inverses U*_k are kept because they also
/// define the products U_{k,l} used by the conditional procedures.
template <typename Scalar>
class UpperSolver {
 public:
  using scalar_type = Scalar;

  UpperSolver(BlockGenerator<Scalar> model, AugmentationSpec<Scalar> alpha,
              InversePolicy policy = InversePolicy::Lu)
      : model_(std::move(model)), alpha_(std::move(alpha)), policy_(policy) {
    if (std::holds_alternative<typename AugmentationSpec<Scalar>::UnitColumn>(alpha_.kind))
      throw Error(ErrorKind::InvalidAlpha,
                  "the upper solver needs an alpha supported on the last level");
    const auto cls = classify(model_);
    if (cls != StructureClass::UpperHessenberg && cls != StructureClass::Tridiagonal)
      throw Error(ErrorKind::IncompatibleStructure,
                  std::string("upper solver cannot handle a ") + to_string(cls) + " model");
  }

  /// Computes the next stage.
  ///
  /// The diagonal of T*_s is rebuilt from its off-diagonals and its escape
  /// rates, and the escape rates are accumulated from nonnegative terms: the
  /// direct rates out of the truncation plus those carried through the lower
  /// levels by U*_{s-1,l}. Taking them as row sums of the formula instead
  /// loses a constant factor of accuracy per level.
  void advance(Index max_level = -1) {
    (void)max_level;
    const Index s = stage_ + 1;
    model_.check_level(s);
    const Index ms = model_.level_size(s);
    Matrix<Scalar> t_star = model_.block(s, s);
    Vector<Scalar> escape = escape_beyond(s, s);
    Matrix<Scalar> u_s;
    if (s > 0) {
      const Matrix<Scalar> down = model_.block(s, s - 1);
      Matrix<Scalar> acc = Matrix<Scalar>::Zero(model_.level_size(s - 1), ms);
      Vector<Scalar> carried = Vector<Scalar>::Zero(model_.level_size(s - 1));
      const Index first = model_.band_high() ? std::max<Index>(0, s - *model_.band_high()) : 0;
      for (Index l = first; l < s; ++l) {
        const Matrix<Scalar> up = model_.block(l, s);
        acc.noalias() += row_[l] * up;
        if (!model_.band_high()) inside_[l] += up.rowwise().sum();
        carried.noalias() += row_[l] * escape_beyond(l, s);
      }
      t_star.noalias() += down * acc;
      escape.noalias() += down * carried;
    }
    set_diagonal_from_escape(t_star, escape);
    if (policy_ == InversePolicy::Lu)
      u_s = TransientLu<Scalar>(t_star, escape).inverse();
    else
      u_s = fundamental_block<Scalar>(t_star, policy_);

    if (s > 0) {
      const Matrix<Scalar> down = model_.block(s, s - 1);
      const Matrix<Scalar> g = u_s * down;
      for (Index k = 0; k < s; ++k) row_[k] = (g * row_[k]).eval();
      u_vec_ = (u_s * (Vector<Scalar>::Ones(ms) + down * u_vec_)).eval();
      row_.push_back(u_s);
      diag_.push_back(std::move(u_s));
    } else {
      u_vec_ = u_s.rowwise().sum();
      row_ = {u_s};
      diag_ = {std::move(u_s)};
    }
    ++inverses_;
    stage_ = s;
    t_history_.push_back(std::move(t_star));

    const RowVector<Scalar> a = level_alpha(s);
    const Scalar mass = a.dot(u_vec_.transpose());
    if (!(mass > Scalar(0)))
      throw Error(ErrorKind::SingularMatrix, "alpha carries no mass at stage " + std::to_string(s));
    levels_.assign(static_cast<std::size_t>(s + 1), {});
    for (Index k = 0; k <= s; ++k) levels_[static_cast<std::size_t>(k)] = (a * row_[k]) / mass;
  }

  Index stage() const { return stage_; }
  Index inverse_count() const { return inverses_; }
  const std::vector<RowVector<Scalar>>& levels() const { return levels_; }

  /// U*_{s,k}, k = 0..s, for the current stage s.
  const std::vector<Matrix<Scalar>>& last_block_row() const { return row_; }
  /// u*_s for the current stage.
  const Vector<Scalar>& row_sums() const { return u_vec_; }
  /// U*_k for every level visited so far.
  const std::vector<Matrix<Scalar>>& level_inverses() const { return diag_; }
  /// T*_k for every level visited so far, U*_k = (-T*_k)^{-1}.
  const std::vector<Matrix<Scalar>>& t_star_history() const { return t_history_; }

  /// U_{k,l} = (Q_{k,k-1} U*_{k-1}) ... (Q_{l+1,l} U*_l), for l <= k <= stage().
  Matrix<Scalar> transfer(Index k, Index l) const {
    if (l > k || k > stage_ || l < 0)
      throw Error(ErrorKind::LevelOutOfRange, "transfer product needs l <= k <= current stage");
    Matrix<Scalar> u = Matrix<Scalar>::Identity(model_.level_size(k), model_.level_size(k));
    for (Index j = k; j > l; --j) u = (u * model_.block(j, j - 1) * diag_[j - 1]).eval();
    return u;
  }

  const BlockGenerator<Scalar>& model() const { return model_; }

 private:
  /// Rates from the states of level l to levels above s.
  Vector<Scalar> escape_beyond(Index l, Index s) {
    Vector<Scalar> out = Vector<Scalar>::Zero(model_.level_size(l));
    if (model_.band_high()) {
      for (Index j = s + 1; j <= model_.last_column(l); ++j) out += model_.block(l, j).rowwise().sum();
      return out;
    }
    // Unbounded above: complement of the rates inside the truncation.
    if (l == s) {
      Vector<Scalar> inside = Vector<Scalar>::Zero(model_.level_size(s));
      for (Index j = model_.first_column(s); j <= s; ++j) inside += model_.block(s, j).rowwise().sum();
      inside_.push_back(inside);
    }
    return (-inside_[l]).cwiseMax(Scalar(0));
  }

  RowVector<Scalar> level_alpha(Index s) const {
    const Index ms = model_.level_size(s);
    if (std::holds_alternative<typename AugmentationSpec<Scalar>::UniformLastLevel>(alpha_.kind))
      return RowVector<Scalar>::Constant(ms, Scalar(1) / Scalar(ms));
    return alpha_.resolve(ms, ms);
  }

  BlockGenerator<Scalar> model_;
  AugmentationSpec<Scalar> alpha_;
  InversePolicy policy_;
  Index stage_ = -1;
  Index inverses_ = 0;
  std::vector<Matrix<Scalar>> row_;
  std::vector<Matrix<Scalar>> diag_;
  std::vector<Matrix<Scalar>> t_history_;
  std::vector<Vector<Scalar>> inside_;  // row sums within the truncation, unbounded bands only
  Vector<Scalar> u_vec_;
  std::vector<RowVector<Scalar>> levels_;
};

template <typename Scalar>
SolveResult<Scalar> upper_solve(const BlockGenerator<Scalar>& model,
                                const AugmentationSpec<Scalar>& alpha, double epsilon,
                                Index max_level, InversePolicy policy = InversePolicy::Lu) {
  UpperSolver<Scalar> solver(model, alpha, policy);
  return drive(solver, epsilon, max_level);
}

}  // namespace mipform
