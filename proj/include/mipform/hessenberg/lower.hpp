#pragma once

#include <utility>
#include <vector>

#include "mipform/hessenberg/report.hpp"
#include "mipform/model.hpp"

namespace mipform {

/// Stagewise solver for lower block-Hessenberg generators.
///
/// Each visited stage s is rebuilt from scratch: the inverses sR*_k are
/// computed from k = s down to 0 and the first block row of the fundamental
/// matrix of the level-s truncation is sR*_0 sR_{0,k}. The output is its
/// first row, normalized, i.e. the truncation augmented in state 0.
template <typename Scalar>
class LowerSolver {
 public:
  using scalar_type = Scalar;

  LowerSolver(BlockGenerator<Scalar> model, Schedule schedule = Schedule::Linear,
              InversePolicy policy = InversePolicy::Lu)
      : model_(std::move(model)), schedule_(schedule), policy_(policy) {
    const auto cls = classify(model_);
    if (cls != StructureClass::LowerHessenberg && cls != StructureClass::Tridiagonal &&
        cls != StructureClass::Gim1Type)
      throw Error(ErrorKind::IncompatibleStructure,
                  std::string("lower solver cannot handle a ") + to_string(cls) + " model");
  }

  /// Moves to the next scheduled stage: s + 1, or 2^i - 1 under doubling.
  /// A doubling step never jumps past max_level when one is given.
  void advance(Index max_level = -1) {
    Index next = schedule_ == Schedule::Linear ? stage_ + 1 : 2 * (stage_ + 1) - 1;
    if (schedule_ == Schedule::Doubling && stage_ < 0) next = 0;
    if (max_level >= 0 && next > max_level && stage_ < max_level) next = max_level;
    compute_stage(next);
  }

  /// Runs stage s directly (all s + 1 inverses).
  ///
  /// As in the upper solver, each T_k gets its diagonal from its
  /// off-diagonals and escape rates, and the escape rates (to levels below k,
  /// directly or through the eliminated levels above, and out of the
  /// truncation) are sums of nonnegative terms.
  void compute_stage(Index s) {
    model_.check_level(s);
    // Inverses sR*_k, k = s..0, and the current block row sR_{k,l}, l = k..s.
    std::vector<Matrix<Scalar>> r_star(static_cast<std::size_t>(s + 1));
    r_star[s] = invert(model_.block(s, s), escape_of(s, s, s));
    Index inverses = 1;
    std::vector<Matrix<Scalar>> r_row{Matrix<Scalar>::Identity(model_.level_size(s),
                                                                model_.level_size(s))};
    for (Index k = s - 1; k >= 0; --k) {
      const Matrix<Scalar> h = model_.block(k, k + 1) * r_star[k + 1];
      std::vector<Matrix<Scalar>> next_row;
      next_row.reserve(r_row.size() + 1);
      next_row.push_back(Matrix<Scalar>::Identity(model_.level_size(k), model_.level_size(k)));
      for (const auto& r : r_row) next_row.push_back(h * r);
      Matrix<Scalar> t = model_.block(k, k);
      Vector<Scalar> escape = escape_of(k, k, s);
      const Index last = model_.band_low() ? std::min(s, k + *model_.band_low()) : s;
      for (Index l = k + 1; l <= last; ++l)
        t.noalias() += next_row[l - k] * model_.block(l, k);
      for (Index l = k + 1; l <= s; ++l)
        if (has_escape(l, k, s)) escape.noalias() += next_row[l - k] * escape_of(l, k, s);
      r_star[k] = invert(t, escape);
      ++inverses;
      r_row = std::move(next_row);
    }

    r0k_.assign(static_cast<std::size_t>(s + 1), {});
    r0k_[0] = Matrix<Scalar>::Identity(model_.level_size(0), model_.level_size(0));
    for (Index k = 1; k <= s; ++k)
      r0k_[k] = r0k_[k - 1] * model_.block(k - 1, k) * r_star[k];
    r_star0_ = r_star[0];

    const RowVector<Scalar> head = r_star0_.row(0);
    levels_.assign(static_cast<std::size_t>(s + 1), {});
    Scalar mass = 0;
    for (Index k = 0; k <= s; ++k) {
      levels_[k] = head * r0k_[k];
      mass += levels_[k].sum();
    }
    if (!(mass > Scalar(0))) throw Error(ErrorKind::SingularMatrix, "stage output has no mass");
    for (auto& v : levels_) v /= mass;
    stage_ = s;
    inverses_ += inverses;
  }

  Index stage() const { return stage_; }
  Index inverse_count() const { return inverses_; }
  Schedule schedule() const { return schedule_; }
  const std::vector<RowVector<Scalar>>& levels() const { return levels_; }
  /// sR*_0 of the current stage.
  const Matrix<Scalar>& r_star0() const { return r_star0_; }
  /// sR_{0,k}, k = 0..s, of the current stage.
  const std::vector<Matrix<Scalar>>& r0k() const { return r0k_; }

 private:
  /// Whether level l can leave levels k..s in one jump.
  bool has_escape(Index l, Index k, Index s) const {
    return model_.first_column(l) < k || model_.last_column(l) > s;
  }

  /// Rates from level l to levels below k or above s.
  Vector<Scalar> escape_of(Index l, Index k, Index s) {
    Vector<Scalar> out = below(l, k);
    for (Index j = s + 1; j <= model_.last_column(l); ++j) out += model_.block(l, j).rowwise().sum();
    return out;
  }

  /// Sum of the row sums of Q_{l,j} over j < k, from a per-level prefix cache.
  Vector<Scalar> below(Index l, Index k) {
    const Index first = model_.first_column(l);
    if (k <= first) return Vector<Scalar>::Zero(model_.level_size(l));
    if (static_cast<Index>(prefix_.size()) <= l) prefix_.resize(static_cast<std::size_t>(l + 1));
    auto& p = prefix_[static_cast<std::size_t>(l)];
    if (p.empty()) p.push_back(Vector<Scalar>::Zero(model_.level_size(l)));
    while (static_cast<Index>(p.size()) < k - first + 1) {
      const Index j = first + static_cast<Index>(p.size()) - 1;
      p.push_back(p.back() + model_.block(l, j).rowwise().sum());
    }
    return p[static_cast<std::size_t>(k - first)];
  }

  Matrix<Scalar> invert(Matrix<Scalar> t, const Vector<Scalar>& escape) const {
    set_diagonal_from_escape(t, escape);
    if (policy_ == InversePolicy::Lu) return TransientLu<Scalar>(t, escape).inverse();
    return fundamental_block<Scalar>(t, policy_);
  }

  BlockGenerator<Scalar> model_;
  Schedule schedule_;
  InversePolicy policy_;
  Index stage_ = -1;
  Index inverses_ = 0;
  Matrix<Scalar> r_star0_;
  std::vector<Matrix<Scalar>> r0k_;
  std::vector<RowVector<Scalar>> levels_;
  // prefix_[l][i]: row sums of Q_{l,j} summed over first_column(l) <= j < first_column(l) + i.
  std::vector<std::vector<Vector<Scalar>>> prefix_;
};

template <typename Scalar>
SolveResult<Scalar> lower_solve(const BlockGenerator<Scalar>& model, double epsilon,
                                Index max_level, Schedule schedule = Schedule::Linear,
                                InversePolicy policy = InversePolicy::Lu) {
  LowerSolver<Scalar> solver(model, schedule, policy);
  return drive(solver, epsilon, max_level);
}

}  // namespace mipform
