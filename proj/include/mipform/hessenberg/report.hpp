#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "mipform/matrix.hpp"
#include "mipform/model.hpp"

namespace mipform {

enum class StopReason { Converged, MaxLevelReached, NumericalFailure };

constexpr const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "Converged";
    case StopReason::MaxLevelReached: return "MaxLevelReached";
    case StopReason::NumericalFailure: return "NumericalFailure";
  }
  return "NumericalFailure";
}

struct StageRecord {
  Index s = 0;
  double tv_delta = 0;   // distance to the previous stage output (zero vector before stage 0)
  double elapsed = 0;    // seconds spent on this stage
  Index inverse_count = 0;  // cumulative block inverses after this stage
};

struct ConvergenceReport {
  std::vector<StageRecord> stages;
  StopReason stop_reason = StopReason::MaxLevelReached;
  double epsilon = 0;
  std::string failure;  // message of the error that ended a NumericalFailure run
};

template <typename Scalar>
struct SolveResult {
  std::vector<RowVector<Scalar>> levels;
  ConvergenceReport report;
  Index stage = -1;
};

enum class Schedule { Linear, Doubling };

/// Advances `stream` until consecutive outputs are closer than epsilon or the
/// stream reaches max_level. Numerical errors end the run with the last good
/// output rather than propagating.
template <typename Stream>
auto drive(Stream& stream, double epsilon, Index max_level)
    -> SolveResult<typename Stream::scalar_type> {
  using Scalar = typename Stream::scalar_type;
  if (!(epsilon > 0 && epsilon < 1))
    throw Error(ErrorKind::InvalidInput, "epsilon must lie in (0, 1)");
  if (max_level < 0) throw Error(ErrorKind::InvalidInput, "max_level must be nonnegative");

  SolveResult<Scalar> result;
  result.report.epsilon = epsilon;
  RowVector<Scalar> previous;
  while (true) {
    const auto start = std::chrono::steady_clock::now();
    try {
      stream.advance(max_level);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularMatrix && e.kind() != ErrorKind::NonConvergence &&
          e.kind() != ErrorKind::InvalidInput)
        throw;
      result.report.stop_reason = StopReason::NumericalFailure;
      result.report.failure = e.what();
      return result;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    RowVector<Scalar> current = join_levels(stream.levels());
    const double tv = static_cast<double>(tv_distance<Scalar>(current, previous));
    result.report.stages.push_back({stream.stage(), tv, elapsed, stream.inverse_count()});
    result.levels = stream.levels();
    result.stage = stream.stage();
    previous = std::move(current);
    if (tv < epsilon) {
      result.report.stop_reason = StopReason::Converged;
      return result;
    }
    if (stream.stage() >= max_level) {
      result.report.stop_reason = StopReason::MaxLevelReached;
      return result;
    }
  }
}

}  // namespace mipform
