#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mipform/catalog.hpp"
#include "mipform/io.hpp"
#include "mipform/truncation.hpp"

namespace mipform::cli {

enum class Algorithm { Upper, Lower, Gim1, Oracle, Takine, QbdR };

struct RunConfig {
  std::string builtin;  // empty when model_path is used
  Params params;
  std::string model_path;
  Algorithm algorithm = Algorithm::Upper;
  double epsilon = 1e-8;
  Index max_level = 10000;
  std::string augmentation = "uniform-last-level";  // | unit:<state> | custom:w0,w1,...
  Schedule schedule = Schedule::Linear;
  InversePolicy solver = InversePolicy::Lu;
  std::string format = "json";
  Index takine_n = 10;
  Index takine_s = 100;
  std::string takine_variant = "mu";  // | row
  Index qbd_n = 10;
  Index qbd_l = 60;
};

/// Exit code 0 for converged or exact results, 2 when max_level stopped the
/// run, 1 for errors (numerical failures still emit their last output).
int exit_code(const RunOutput& out);

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm a);
AugmentationSpec<double> parse_augmentation(const std::string& text);

/// Runs one configuration.
RunOutput run(const RunConfig& config);

/// Output of `config` at a fixed stage s (for stagewise comparison).
std::vector<RowVectorXd> stage_output(const RunConfig& config, Index s);

struct Comparison {
  std::vector<double> per_level;
  double total = 0;
  std::vector<std::pair<Index, double>> stagewise;  // (s, total TV) when requested
};

Comparison compare(const RunConfig& a, const RunConfig& b, bool stagewise);

/// Full command-line entry point: `run ...` or `compare ...`.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mipform::cli
