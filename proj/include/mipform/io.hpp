#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mipform/diagnostics.hpp"
#include "mipform/hessenberg/report.hpp"
#include "mipform/model.hpp"

namespace mipform {

// Model files:
//   { "level_sizes": {"prefix": [m0, ...], "tail": m},
//     "blocks": [ {"k": int | "tail", "l_offset": int, "entries": [[...], ...]} ],
//     "structure_hint": "upper" | "lower" | "gim1" | "general" }
// Explicit blocks give Q_{k,k+l_offset}. A "tail" block repeats Q_{k,k+l_offset}
// for every level k at or beyond the prefix (combinations reaching below
// level 0 are skipped).
BlockGenerator<double> parse_model(const std::string& json_text);
BlockGenerator<double> load_model(const std::string& path);

// Certificate files:
//   { "b": real, "C": [states], "f": {"prefix": [...], "tail_ratio": r, "tail_start": k},
//     "v_description": "..." }
DriftCertificate parse_certificate(const std::string& json_text);
DriftCertificate load_certificate(const std::string& path);

/// A solver outcome as written by the command-line tool.
struct RunOutput {
  std::string algorithm;
  std::string status;  // stop reason, or "Exact" for one-shot methods
  Index stage = -1;
  std::vector<RowVectorXd> levels;
  ConvergenceReport report;
  bool has_report = false;
};

std::string to_json(const RunOutput& out, int indent = 2);
RunOutput run_output_from_json(const std::string& json_text);
void write_csv(std::ostream& os, const std::vector<RowVectorXd>& levels);

std::string read_file(const std::string& path);

}  // namespace mipform
