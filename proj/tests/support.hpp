#pragma once

// Shared helpers for the test binaries: random generators, analytic
// reference distributions and small comparison utilities.

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "mipform/catalog.hpp"
#include "mipform/model.hpp"
#include "mipform/truncation.hpp"

namespace testing_support {

using namespace mipform;

/// Random transient Q-matrix: nonnegative off-diagonals, every row leaks.
inline MatrixXd random_transient(std::mt19937_64& rng, Index m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd t(m, m);
  for (Index i = 0; i < m; ++i) {
    double off = 0;
    for (Index j = 0; j < m; ++j) {
      if (i == j) continue;
      t(i, j) = u(rng) < 0.3 ? 0.0 : u(rng);
      off += t(i, j);
    }
    t(i, i) = -(off + 0.05 + u(rng));
  }
  return t;
}

/// Random level-dependent block model with given bands. Upward blocks carry
/// total rate <= 1 per row and the downward ones >= 3, so the chain drifts
/// towards level 0. Blocks for levels >= depth repeat those of depth - 1.
///
/// Rates are multiples of 1/256, so every row sum is exactly zero in double
/// precision. Otherwise the roundoff in the diagonal acts as a spurious
/// escape rate, and deep truncations (whose fundamental matrices grow
/// geometrically) would amplify it far beyond the tolerances under test.
inline BlockGenerator<double> random_block_model(std::uint64_t seed, Index low, Index high,
                                                 std::vector<Index> prefix, Index tail,
                                                 Index depth = 80) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LevelSizes sizes{std::move(prefix), tail};
  using Key = std::pair<Index, Index>;
  auto blocks = std::make_shared<std::map<Key, MatrixXd>>();
  for (Index k = 0; k < depth; ++k) {
    const Index mk = sizes(k);
    Vector<double> row_sum = Vector<double>::Zero(mk);
    for (Index l = std::max<Index>(0, k - low); l <= k + high; ++l) {
      if (l == k) continue;
      MatrixXd b(mk, sizes(l));
      for (Index i = 0; i < b.rows(); ++i)
        for (Index j = 0; j < b.cols(); ++j) b(i, j) = u(rng) < 0.25 ? 0.0 : u(rng);
      // Scale so that up-rates total about 1 and down-rates about 3 per row.
      const double target = l > k ? 1.0 / static_cast<double>(high) : 3.0 / static_cast<double>(low);
      for (Index i = 0; i < b.rows(); ++i) {
        const double s = b.row(i).sum();
        if (s > 0) b.row(i) *= target * (0.5 + 0.5 * u(rng)) / s;
      }
      b = (b * 256.0).array().round() / 256.0;
      row_sum += b.rowwise().sum();
      (*blocks)[{k, l}] = b;
    }
    MatrixXd d(mk, mk);
    for (Index i = 0; i < mk; ++i)
      for (Index j = 0; j < mk; ++j)
        d(i, j) = i == j ? 0.0 : (u(rng) < 0.4 ? 0.0 : std::round(256.0 * u(rng)) / 256.0);
    row_sum += d.rowwise().sum();
    for (Index i = 0; i < mk; ++i) d(i, i) = -row_sum(i);
    (*blocks)[{k, k}] = d;
  }
  auto provider = [blocks, depth](Index k, Index l) -> MatrixXd {
    if (k >= depth) {
      const Index shift = k - (depth - 1);
      return blocks->at({k - shift, l - shift});
    }
    if (auto it = blocks->find({k, l}); it != blocks->end()) return it->second;
    throw Error(ErrorKind::LevelOutOfRange, "block outside the generated pattern");
  };
  BlockGenerator<double>::Options o;
  o.band_low = low;
  o.band_high = high;
  return BlockGenerator<double>(sizes, provider, o);
}

/// Geometric pi(i) = (1 - rho) rho^i on levels 0..n.
inline RowVectorXd geometric(double rho, Index n) {
  RowVectorXd pi(n + 1);
  for (Index i = 0; i <= n; ++i) pi(i) = (1 - rho) * std::pow(rho, static_cast<double>(i));
  return pi;
}

inline double tv(const RowVectorXd& a, const RowVectorXd& b) { return tv_distance<double>(a, b); }

inline double tv(const std::vector<RowVectorXd>& a, const std::vector<RowVectorXd>& b) {
  return tv_distance<double>(join_levels(a), join_levels(b));
}

/// Dense value of the level-s truncation augmented by `alpha`.
inline RowVectorXd dense_pi_bar(const BlockGenerator<double>& model, Index s,
                                const AugmentationSpec<double>& alpha) {
  return solve_truncation<double>(nw_corner(model, s), alpha, model.level_size(s)).pi_bar;
}

}  // namespace testing_support
