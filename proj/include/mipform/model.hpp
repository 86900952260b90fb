#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mipform/matrix.hpp"

namespace mipform {

/// Level cardinalities m_0, m_1, ...: an explicit prefix, then a constant tail.
struct LevelSizes {
  std::vector<Index> prefix;
  Index tail = 1;

  Index operator()(Index level) const {
    return level < static_cast<Index>(prefix.size()) ? prefix[static_cast<std::size_t>(level)]
                                                     : tail;
  }

  /// Number of states in levels 0..level, i.e. n_level + 1.
  Index states_through(Index level) const {
    if (level < 0) return 0;
    const Index p = static_cast<Index>(prefix.size());
    Index total = 0;
    for (Index k = 0; k <= std::min(level, p - 1); ++k) total += prefix[static_cast<std::size_t>(k)];
    if (level >= p) total += (level - p + 1) * tail;
    return total;
  }

  /// Global index of the first state of `level`.
  Index offset(Index level) const { return states_through(level - 1); }

  /// Index of the level containing global state `state`.
  Index level_of(Index state) const {
    Index level = 0;
    Index first = 0;
    const Index p = static_cast<Index>(prefix.size());
    while (level < p) {
      const Index m = prefix[static_cast<std::size_t>(level)];
      if (state < first + m) return level;
      first += m;
      ++level;
    }
    return level + (state - first) / tail;
  }

  /// Number of levels covering `states` entries exactly; -1 if the count
  /// does not end on a level boundary.
  Index levels_for_states(Index states) const {
    Index level = 0;
    Index total = 0;
    while (total < states) total += (*this)(level++);
    return total == states ? level : -1;
  }
};

/// Number of structurally nonzero block bands on one side of the diagonal;
/// std::nullopt means every block on that side may be nonzero.
using Bandwidth = std::optional<Index>;

enum class StructureHint { None, Upper, Lower, Gim1, General };

enum class StructureClass { UpperHessenberg, LowerHessenberg, Tridiagonal, Gim1Type, General };

constexpr const char* to_string(StructureClass c) {
  switch (c) {
    case StructureClass::UpperHessenberg: return "UpperHessenberg";
    case StructureClass::LowerHessenberg: return "LowerHessenberg";
    case StructureClass::Tridiagonal: return "Tridiagonal";
    case StructureClass::Gim1Type: return "Gim1Type";
    case StructureClass::General: return "General";
  }
  return "General";
}

/// Level-partitioned infinitesimal generator Q = (Q_{k,l}).
///
/// Blocks come from a pure provider; anything outside the declared bands is
/// the zero block and the provider is never asked for it. Immutable after
/// construction, so concurrent reads are safe as long as the provider is.
template <typename Scalar>
class BlockGenerator {
 public:
  using BlockFn = std::function<Matrix<Scalar>(Index, Index)>;

  struct Options {
    Bandwidth band_low = 1;
    Bandwidth band_high = 1;
    /// Largest level the provider can produce; nullopt for analytic providers.
    std::optional<Index> max_level;
    StructureHint hint = StructureHint::None;
    /// Block columns past the diagonal summed for rows of a dense-above model.
    Index dense_scan = 256;
  };

  BlockGenerator(LevelSizes sizes, BlockFn provider, Options options)
      : sizes_(std::move(sizes)), provider_(std::move(provider)), options_(std::move(options)) {
    if (!provider_) throw Error(ErrorKind::InvalidInput, "block provider is empty");
    if (sizes_.tail <= 0) throw Error(ErrorKind::InvalidInput, "tail level size must be positive");
    for (Index m : sizes_.prefix)
      if (m <= 0) throw Error(ErrorKind::InvalidInput, "level sizes must be positive");
  }

  const LevelSizes& level_sizes() const { return sizes_; }
  Index level_size(Index k) const { return sizes_(k); }
  Bandwidth band_low() const { return options_.band_low; }
  Bandwidth band_high() const { return options_.band_high; }
  std::optional<Index> max_level() const { return options_.max_level; }
  StructureHint hint() const { return options_.hint; }
  Index dense_scan() const { return options_.dense_scan; }
  const Options& options() const { return options_; }

  /// n_s + 1, the number of states in levels 0..s.
  Index states_through(Index s) const { return sizes_.states_through(s); }

  bool in_band(Index k, Index l) const {
    if (l < k) return !options_.band_low || k - l <= *options_.band_low;
    if (l > k) return !options_.band_high || l - k <= *options_.band_high;
    return true;
  }

  /// First and last block columns that may be nonzero in block row k.
  Index first_column(Index k) const {
    return options_.band_low ? std::max<Index>(0, k - *options_.band_low) : 0;
  }
  Index last_column(Index k) const {
    Index last = options_.band_high ? k + *options_.band_high : k + options_.dense_scan;
    if (options_.max_level) last = std::min(last, *options_.max_level);
    return last;
  }

  void check_level(Index k) const {
    if (k < 0 || (options_.max_level && k > *options_.max_level))
      throw Error(ErrorKind::LevelOutOfRange, "level " + std::to_string(k) + " is not available");
  }

  /// Q_{k,l}, shape m_k x m_l.
  Matrix<Scalar> block(Index k, Index l) const {
    check_level(k);
    check_level(l);
    if (!in_band(k, l)) return Matrix<Scalar>::Zero(sizes_(k), sizes_(l));
    Matrix<Scalar> b = provider_(k, l);
    if (b.rows() != sizes_(k) || b.cols() != sizes_(l))
      throw Error(ErrorKind::InvalidInput, "block (" + std::to_string(k) + "," +
                                               std::to_string(l) + ") has the wrong shape");
    return b;
  }

  /// Provider output without shape checks (used by validation).
  Matrix<Scalar> raw_block(Index k, Index l) const { return provider_(k, l); }

 private:
  LevelSizes sizes_;
  BlockFn provider_;
  Options options_;
};

struct Violation {
  enum class Kind { Sign, RowSum, Diagonal, Shape };
  Kind kind;
  Index level;
  Index state;  // global state index, or -1 for whole-block problems
  double value;
  std::string detail;
};

inline const char* to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::Sign: return "sign";
    case Violation::Kind::RowSum: return "row-sum";
    case Violation::Kind::Diagonal: return "diagonal";
    case Violation::Kind::Shape: return "shape";
  }
  return "unknown";
}

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

inline constexpr double kRowSumTolerance = 1e-10;

/// Checks sign pattern, diagonal negativity, block shapes and conservativity
/// of every block row 0..max_level. Violations are returned, never thrown.
template <typename Scalar>
ValidationReport validate(const BlockGenerator<Scalar>& model, Index max_level) {
  model.check_level(max_level);
  ValidationReport report;
  const auto& sizes = model.level_sizes();
  for (Index k = 0; k <= max_level; ++k) {
    const Index mk = sizes(k);
    const Index base = sizes.offset(k);
    std::vector<Scalar> row_sum(static_cast<std::size_t>(mk), Scalar(0));
    bool shape_ok = true;
    for (Index l = model.first_column(k); l <= model.last_column(k); ++l) {
      if (!model.in_band(k, l)) continue;
      Matrix<Scalar> b = model.raw_block(k, l);
      if (b.rows() != mk || b.cols() != sizes(l)) {
        report.violations.push_back({Violation::Kind::Shape, k, -1, 0.0,
                                     "block (" + std::to_string(k) + "," + std::to_string(l) +
                                         ") is " + std::to_string(b.rows()) + "x" +
                                         std::to_string(b.cols()) + ", expected " +
                                         std::to_string(mk) + "x" + std::to_string(sizes(l))});
        shape_ok = false;
        continue;
      }
      for (Index i = 0; i < mk; ++i)
        for (Index j = 0; j < b.cols(); ++j) {
          const Scalar v = b(i, j);
          row_sum[static_cast<std::size_t>(i)] += v;
          const bool diagonal = (l == k && i == j);
          if (diagonal) {
            if (!(v < Scalar(0)))
              report.violations.push_back({Violation::Kind::Diagonal, k, base + i,
                                           static_cast<double>(v),
                                           "diagonal entry is not strictly negative"});
          } else if (!(v >= -kQMatrixTolerance<Scalar>)) {
            report.violations.push_back(
                {Violation::Kind::Sign, k, base + i, static_cast<double>(v),
                 "negative off-diagonal rate in block (" + std::to_string(k) + "," +
                     std::to_string(l) + ")"});
          }
        }
    }
    if (!shape_ok) continue;
    for (Index i = 0; i < mk; ++i) {
      const Scalar s = row_sum[static_cast<std::size_t>(i)];
      if (!(std::abs(static_cast<double>(s)) <= kRowSumTolerance))
        report.violations.push_back({Violation::Kind::RowSum, k, base + i,
                                     static_cast<double>(s), "row does not sum to zero"});
    }
  }
  return report;
}

/// Most specific class whose zero pattern the model shows on the probe window
/// of levels 0..max(20, finite declared bands + 1).
template <typename Scalar>
StructureClass classify(const BlockGenerator<Scalar>& model) {
  Index depth = 20;
  if (model.band_low()) depth = std::max(depth, *model.band_low() + 1);
  if (model.band_high()) depth = std::max(depth, *model.band_high() + 1);
  if (model.max_level()) depth = std::min(depth, *model.max_level());
  Index below = 0;
  Index above = 0;
  for (Index k = 0; k <= depth; ++k)
    for (Index l = 0; l <= depth; ++l) {
      if (l == k || !model.in_band(k, l)) continue;
      if (k - l <= below && l - k <= above) continue;
      if (model.block(k, l).cwiseAbs().maxCoeff() == Scalar(0)) continue;
      below = std::max(below, k - l);
      above = std::max(above, l - k);
    }
  const bool upper = below <= 1;
  const bool lower = above <= 1;
  if (model.hint() == StructureHint::Gim1 && lower) return StructureClass::Gim1Type;
  if (upper && lower) return StructureClass::Tridiagonal;
  if (upper) return StructureClass::UpperHessenberg;
  if (lower) return StructureClass::LowerHessenberg;
  return StructureClass::General;
}

/// The NW-corner truncation over levels 0..s, of order n_s + 1.
template <typename Scalar>
Matrix<Scalar> nw_corner(const BlockGenerator<Scalar>& model, Index s) {
  model.check_level(s);
  const auto& sizes = model.level_sizes();
  const Index n = sizes.states_through(s);
  Matrix<Scalar> q = Matrix<Scalar>::Zero(n, n);
  for (Index k = 0; k <= s; ++k) {
    const Index r = sizes.offset(k);
    for (Index l = model.first_column(k); l <= std::min(s, model.last_column(k)); ++l) {
      if (!model.in_band(k, l)) continue;
      q.block(r, sizes.offset(l), sizes(k), sizes(l)) = model.block(k, l);
    }
  }
  return q;
}

/// Splits a row vector over levels 0..s into per-level pieces.
template <typename Scalar>
std::vector<RowVector<Scalar>> split_levels(const RowVector<Scalar>& x, const LevelSizes& sizes) {
  std::vector<RowVector<Scalar>> out;
  Index pos = 0;
  for (Index k = 0; pos < x.size(); ++k) {
    const Index m = sizes(k);
    if (pos + m > x.size())
      throw Error(ErrorKind::ShapeMismatch, "vector length does not end on a level boundary");
    out.emplace_back(x.segment(pos, m));
    pos += m;
  }
  return out;
}

template <typename Scalar>
RowVector<Scalar> join_levels(const std::vector<RowVector<Scalar>>& levels) {
  Index n = 0;
  for (const auto& v : levels) n += v.size();
  RowVector<Scalar> out(n);
  Index pos = 0;
  for (const auto& v : levels) {
    out.segment(pos, v.size()) = v;
    pos += v.size();
  }
  return out;
}

/// GI/M/1-type blocks: B_0, B_1 and B_{-k} touch the boundary level 0, the
/// level-independent A_1, A_0, A_{-1}, ... act between interior levels.
template <typename Scalar>
struct Gim1Blocks {
  Index boundary_size = 1;
  Index interior_size = 1;
  /// A(i), i <= 1: interior_size x interior_size.
  std::function<Matrix<Scalar>(Index)> A;
  /// B(0): m0 x m0; B(1): m0 x m; B(-k): m x m0.
  std::function<Matrix<Scalar>(Index)> B;
  /// Largest downward jump with a nonzero block, nullopt when unbounded.
  std::optional<Index> max_down;

  Matrix<Scalar> a(Index i) const {
    if (i >= 2 || (max_down && -i > *max_down))
      return Matrix<Scalar>::Zero(interior_size, interior_size);
    return A(i);
  }

  Matrix<Scalar> b(Index i) const {
    if (i >= 2 || (max_down && -i > *max_down)) {
      if (i >= 2) return Matrix<Scalar>::Zero(boundary_size, interior_size);
      return Matrix<Scalar>::Zero(interior_size, boundary_size);
    }
    return B(i);
  }
};

/// The lower block-Hessenberg generator induced by GI/M/1-type blocks.
template <typename Scalar>
BlockGenerator<Scalar> to_block_generator(const Gim1Blocks<Scalar>& g) {
  LevelSizes sizes{{g.boundary_size}, g.interior_size};
  auto provider = [g](Index k, Index l) -> Matrix<Scalar> {
    if (k == 0 || l == 0) return g.b(l - k);
    return g.a(l - k);
  };
  typename BlockGenerator<Scalar>::Options opts;
  opts.band_low = g.max_down;
  opts.band_high = 1;
  opts.hint = StructureHint::Gim1;
  return BlockGenerator<Scalar>(std::move(sizes), std::move(provider), opts);
}

/// Reads GI/M/1-type blocks back from a generator whose interior is
/// level-independent; verifies that on the probe window.
template <typename Scalar>
Gim1Blocks<Scalar> gim1_blocks_from(const BlockGenerator<Scalar>& model, Index probe_levels = 20) {
  if (!model.band_high() || *model.band_high() > 1)
    throw Error(ErrorKind::IncompatibleStructure, "GI/M/1 type needs a single super-diagonal band");
  Gim1Blocks<Scalar> g;
  g.boundary_size = model.level_size(0);
  g.interior_size = model.level_size(1);
  g.max_down = model.band_low();
  const Index ref = g.max_down ? *g.max_down + 1 : probe_levels;
  for (Index k = 1; k <= ref + probe_levels; ++k)
    if (model.level_size(k) != g.interior_size)
      throw Error(ErrorKind::IncompatibleStructure, "interior levels must share one size");
  g.A = [model, ref](Index i) { return model.block(ref, ref + i); };
  g.B = [model](Index i) {
    if (i >= 0) return model.block(0, i);
    return model.block(-i, 0);
  };
  for (Index k = 1; k <= probe_levels; ++k)
    for (Index l = 1; l <= std::min(k + 1, probe_levels); ++l) {
      if (!model.in_band(k, l)) continue;
      if ((model.block(k, l) - g.a(l - k)).cwiseAbs().maxCoeff() != Scalar(0))
        throw Error(ErrorKind::IncompatibleStructure,
                    "interior block (" + std::to_string(k) + "," + std::to_string(l) +
                        ") differs from the repeating block");
    }
  return g;
}

}  // namespace mipform
