#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mipform/matrix.hpp"
#include "mipform/model.hpp"

namespace mipform {

/// f(i) listed for states below tail_start, then growing geometrically:
/// f(i) = f(tail_start - 1) * tail_ratio^(i - tail_start + 1).
struct FunctionTail {
  std::vector<double> prefix;
  double tail_ratio = 1;
  Index tail_start = 0;

  double operator()(Index i) const {
    if (i < tail_start) return prefix[static_cast<std::size_t>(i)];
    return prefix[static_cast<std::size_t>(tail_start - 1)] *
           std::pow(tail_ratio, static_cast<double>(i - tail_start + 1));
  }
};

/// Lyapunov data for Q v <= -f + b 1_C, which bounds pi(i) <= b / f(i).
struct DriftCertificate {
  FunctionTail f;
  double b = 0;
  std::set<Index> C;
  std::string v_description;

  void check() const {
    if (!(b > 0) || !std::isfinite(b)) throw Error(ErrorKind::InvalidInput, "b must be positive");
    if (f.tail_start < 1 || f.tail_start > static_cast<Index>(f.prefix.size()))
      throw Error(ErrorKind::InvalidInput, "tail_start must lie in 1..len(prefix)");
    for (double x : f.prefix)
      if (!(x >= 1) || !std::isfinite(x)) throw Error(ErrorKind::InvalidInput, "f must be >= 1");
    if (!std::isfinite(f.tail_ratio) || !(f.tail_ratio > 0))
      throw Error(ErrorKind::InvalidInput, "tail_ratio must be positive");
    for (Index c : C)
      if (c < 0) throw Error(ErrorKind::InvalidInput, "C holds a negative state index");
  }
};

struct DriftReport {
  bool pass = true;
  Index states_checked = 0;
  std::optional<Index> first_violation;  // global state index
  Index violation_level = -1;
  double lhs = 0;  // (Q v)(i) at the violation
  double rhs = 0;  // -f(i) + b 1_C(i) at the violation
};

/// Row-by-row check of the drift inequality on levels 0..max_level.
template <typename Scalar>
DriftReport verify_drift_on_truncation(const BlockGenerator<Scalar>& model,
                                       const DriftCertificate& cert,
                                       const std::vector<double>& v, Index max_level) {
  cert.check();
  model.check_level(max_level);
  const auto& sizes = model.level_sizes();
  Index deepest = 0;
  for (Index k = 0; k <= max_level; ++k) deepest = std::max(deepest, model.last_column(k));
  const Index needed = sizes.states_through(deepest);
  if (static_cast<Index>(v.size()) < needed)
    throw Error(ErrorKind::InsufficientV, "v covers " + std::to_string(v.size()) +
                                              " states, the check needs " + std::to_string(needed));

  DriftReport report;
  for (Index k = 0; k <= max_level; ++k) {
    const Index mk = sizes(k);
    Vector<double> qv = Vector<double>::Zero(mk);
    Vector<double> scale = Vector<double>::Zero(mk);
    for (Index l = model.first_column(k); l <= model.last_column(k); ++l) {
      if (!model.in_band(k, l)) continue;
      const Matrix<double> blk = model.block(k, l).template cast<double>();
      const Index base = sizes.offset(l);
      for (Index j = 0; j < blk.cols(); ++j) {
        const double vj = v[static_cast<std::size_t>(base + j)];
        qv += blk.col(j) * vj;
        scale += blk.col(j).cwiseAbs() * std::abs(vj);
      }
    }
    const Index base = sizes.offset(k);
    for (Index i = 0; i < mk; ++i) {
      const Index state = base + i;
      const double rhs = -cert.f(state) + (cert.C.count(state) ? cert.b : 0.0);
      const double tol = 1e-10 * (scale(i) + std::abs(rhs));
      ++report.states_checked;
      if (qv(i) > rhs + tol && report.pass) {
        report.pass = false;
        report.first_violation = state;
        report.violation_level = k;
        report.lhs = qv(i);
        report.rhs = rhs;
      }
    }
  }
  return report;
}

/// Sum over states i >= first of b / f(i).
inline double drift_tail_bound(const DriftCertificate& cert, Index first) {
  const auto& f = cert.f;
  if (!(f.tail_ratio > 1))
    throw Error(ErrorKind::DivergentTail, "b/f is not summable unless f grows with ratio > 1");
  double total = 0;
  for (Index i = first; i < f.tail_start; ++i) total += cert.b / f(i);
  const Index start = std::max(first, f.tail_start);
  const double q = 1.0 / f.tail_ratio;
  total += cert.b / f(start) / (1.0 - q);
  return total;
}

inline constexpr Index kMaxEpsilonLevels = 10'000'000;

/// Smallest N >= 1 whose tail bound beyond level N is at most epsilon / 2.
template <typename Scalar>
Index level_epsilon_bound(const BlockGenerator<Scalar>& model, const DriftCertificate& cert,
                          double epsilon) {
  cert.check();
  if (!(epsilon > 0 && epsilon < 1))
    throw Error(ErrorKind::InvalidInput, "epsilon must lie in (0, 1)");
  const auto& sizes = model.level_sizes();
  Index first = sizes.states_through(1);  // first state past level N = 1
  for (Index n = 1; n < kMaxEpsilonLevels; ++n) {
    if (drift_tail_bound(cert, first) <= epsilon / 2) return n;
    first += sizes(n + 1);
  }
  throw Error(ErrorKind::NonConvergence, "no truncation level found for this epsilon");
}

/// Levels 0..N of pi rescaled to total mass one.
template <typename Scalar>
std::vector<RowVector<Scalar>> renormalized_head(const std::vector<RowVector<Scalar>>& pi,
                                                 Index n) {
  if (n < 0 || n >= static_cast<Index>(pi.size()))
    throw Error(ErrorKind::LevelOutOfRange, "head level " + std::to_string(n) + " not in pi");
  std::vector<RowVector<Scalar>> head(pi.begin(), pi.begin() + n + 1);
  Scalar mass = 0;
  for (const auto& v : head) mass += v.sum();
  if (!(mass > Scalar(0))) throw Error(ErrorKind::ZeroMass, "head levels carry no mass");
  for (auto& v : head) v /= mass;
  return head;
}

}  // namespace mipform
