#include "mipform/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mipform/hessenberg.hpp"
#include "mipform/truncation.hpp"

namespace mipform::cli {

namespace {

BlockGenerator<double> load(const RunConfig& c) {
  if (!c.model_path.empty()) return load_model(c.model_path);
  if (c.builtin.empty()) throw Error(ErrorKind::InvalidInput, "give --builtin or --model");
  return builtin_model(c.builtin, c.params);
}

Gim1Blocks<double> load_gim1(const RunConfig& c) {
  if (c.model_path.empty() && c.builtin == "gim1_type") return builtin_gim1(c.params);
  const auto model = load(c);
  if (classify(model) != StructureClass::Gim1Type)
    throw Error(ErrorKind::IncompatibleStructure,
                "the gim1 algorithm needs a model with a gim1 structure hint");
  return gim1_blocks_from(model);
}

/// Dense value at stage s for the configured augmentation.
std::vector<RowVectorXd> oracle_levels(const BlockGenerator<double>& model,
                                       const AugmentationSpec<double>& alpha, Index s) {
  const MatrixXd q = nw_corner(model, s);
  const RowVectorXd pi =
      solve_truncation<double>(q, alpha, model.level_size(s)).pi_bar;
  return split_levels(pi, model.level_sizes());
}

RunOutput from_result(const std::string& algorithm, SolveResult<double> r) {
  RunOutput out;
  out.algorithm = algorithm;
  out.status = to_string(r.report.stop_reason);
  out.stage = r.stage;
  out.levels = std::move(r.levels);
  out.report = std::move(r.report);
  out.has_report = true;
  return out;
}

RunOutput exact(const std::string& algorithm, Index stage, std::vector<RowVectorXd> levels) {
  RunOutput out;
  out.algorithm = algorithm;
  out.status = "Exact";
  out.stage = stage;
  out.levels = std::move(levels);
  return out;
}

Params parse_params(const std::vector<std::string>& raw) {
  Params params;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(ErrorKind::InvalidInput, "--param expects key=value, got '" + kv + "'");
    const std::string value = kv.substr(eq + 1);
    char* end = nullptr;
    const double x = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0')
      throw Error(ErrorKind::InvalidInput, "parameter value '" + value + "' is not a number");
    params[kv.substr(0, eq)] = x;
  }
  return params;
}

Schedule parse_schedule(const std::string& s) {
  if (s == "linear") return Schedule::Linear;
  if (s == "doubling") return Schedule::Doubling;
  throw Error(ErrorKind::InvalidInput, "unknown schedule '" + s + "'");
}

InversePolicy parse_solver(const std::string& s) {
  if (s == "lu") return InversePolicy::Lu;
  if (s == "leboudec") return InversePolicy::LeBoudec;
  throw Error(ErrorKind::InvalidInput, "unknown solver '" + s + "'");
}

TakineVariant parse_variant(const std::string& s) {
  if (s == "mu") return TakineVariant::MuForm;
  if (s == "row") return TakineVariant::RowAverage;
  throw Error(ErrorKind::InvalidInput, "unknown takine variant '" + s + "'");
}

/// String-valued mirror of RunConfig used while parsing flags.
struct RawConfig {
  std::string builtin, model_path;
  std::vector<std::string> params;
  std::string algorithm = "upper";
  double epsilon = 1e-8;
  Index max_level = 10000;
  std::string augmentation = "uniform-last-level";
  std::string schedule = "linear";
  std::string solver = "lu";
  std::string format = "json";
  Index takine_n = 10, takine_s = 100;
  std::string takine_variant = "mu";
  Index qbd_n = 10, qbd_l = 60;

  RunConfig resolve() const {
    RunConfig c;
    c.builtin = builtin;
    c.model_path = model_path;
    c.params = parse_params(params);
    c.algorithm = parse_algorithm(algorithm);
    c.epsilon = epsilon;
    c.max_level = max_level;
    c.augmentation = augmentation;
    c.schedule = parse_schedule(schedule);
    c.solver = parse_solver(solver);
    if (format != "json" && format != "csv")
      throw Error(ErrorKind::InvalidInput, "unknown format '" + format + "'");
    c.format = format;
    c.takine_n = takine_n;
    c.takine_s = takine_s;
    c.takine_variant = takine_variant;
    parse_variant(takine_variant);
    c.qbd_n = qbd_n;
    c.qbd_l = qbd_l;
    return c;
  }
};

void add_model_flags(CLI::App& app, RawConfig& raw) {
  auto* b = app.add_option("--builtin", raw.builtin, "Built-in model name (mm1, level_dep_qbd, "
                                                     "mg1_type, gim1_type, catastrophe_qbd)");
  auto* m = app.add_option("--model", raw.model_path, "Model JSON file");
  b->excludes(m);
  app.add_option("--param", raw.params, "Built-in parameter key=value (repeatable)");
}

void add_solver_flags(CLI::App& app, RawConfig& raw, const std::string& prefix) {
  app.add_option("--" + prefix + "algorithm", raw.algorithm,
                 "upper | lower | gim1 | oracle | takine | qbd-r")
      ->capture_default_str();
  app.add_option("--" + prefix + "epsilon", raw.epsilon, "Stopping tolerance on stage TV")
      ->capture_default_str();
  app.add_option("--" + prefix + "max-level", raw.max_level, "Largest stage/level")
      ->capture_default_str();
  app.add_option("--" + prefix + "augmentation", raw.augmentation,
                 "uniform-last-level | unit:<state> | custom:w0,w1,...")
      ->capture_default_str();
  app.add_option("--" + prefix + "schedule", raw.schedule, "linear | doubling (lower only)")
      ->capture_default_str();
  app.add_option("--" + prefix + "solver", raw.solver, "Block inverses: lu | leboudec")
      ->capture_default_str();
  app.add_option("--" + prefix + "takine-n", raw.takine_n, "Conditioning level N for takine")
      ->capture_default_str();
  app.add_option("--" + prefix + "takine-s", raw.takine_s, "Stage s for takine")
      ->capture_default_str();
  app.add_option("--" + prefix + "takine-variant", raw.takine_variant, "mu | row")
      ->capture_default_str();
  app.add_option("--" + prefix + "qbd-n", raw.qbd_n, "Levels 1..N of R for qbd-r")
      ->capture_default_str();
  app.add_option("--" + prefix + "qbd-l", raw.qbd_l, "Extra levels above N for qbd-r")
      ->capture_default_str();
}

void emit(std::ostream& out, const RunOutput& result, const std::string& format) {
  if (format == "csv") write_csv(out, result.levels);
  else out << to_json(result) << '\n';
}

void apply_thread_cap() {
  int threads = 1;
  if (const char* env = std::getenv("HESSENBERG_MAX_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) threads = v;
  }
  Eigen::setNbThreads(threads);
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  if (name == "upper") return Algorithm::Upper;
  if (name == "lower") return Algorithm::Lower;
  if (name == "gim1") return Algorithm::Gim1;
  if (name == "oracle") return Algorithm::Oracle;
  if (name == "takine") return Algorithm::Takine;
  if (name == "qbd-r") return Algorithm::QbdR;
  throw Error(ErrorKind::InvalidInput, "unknown algorithm '" + name + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Upper: return "upper";
    case Algorithm::Lower: return "lower";
    case Algorithm::Gim1: return "gim1";
    case Algorithm::Oracle: return "oracle";
    case Algorithm::Takine: return "takine";
    case Algorithm::QbdR: return "qbd-r";
  }
  return "upper";
}

AugmentationSpec<double> parse_augmentation(const std::string& text) {
  if (text == "uniform-last-level") return AugmentationSpec<double>::uniform_last_level();
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "unit" && !rest.empty()) {
    char* end = nullptr;
    const long nu = std::strtol(rest.c_str(), &end, 10);
    if (*end == '\0' && nu >= 0) return AugmentationSpec<double>::unit_column(nu);
  }
  if (kind == "custom" && !rest.empty()) {
    std::vector<double> w;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      char* end = nullptr;
      const double x = std::strtod(item.c_str(), &end);
      if (item.empty() || *end != '\0')
        throw Error(ErrorKind::InvalidAlpha, "bad custom weight '" + item + "'");
      w.push_back(x);
    }
    RowVectorXd weights = Eigen::Map<RowVectorXd>(w.data(), static_cast<Index>(w.size()));
    return AugmentationSpec<double>::custom(weights);
  }
  throw Error(ErrorKind::InvalidAlpha, "unknown augmentation '" + text + "'");
}

int exit_code(const RunOutput& out) {
  if (out.status == "Converged" || out.status == "Exact") return 0;
  if (out.status == "MaxLevelReached") return 2;
  return 1;
}

RunOutput run(const RunConfig& c) {
  const std::string name = to_string(c.algorithm);
  switch (c.algorithm) {
    case Algorithm::Upper: {
      UpperSolver<double> solver(load(c), parse_augmentation(c.augmentation), c.solver);
      return from_result(name, drive(solver, c.epsilon, c.max_level));
    }
    case Algorithm::Lower: {
      LowerSolver<double> solver(load(c), c.schedule, c.solver);
      return from_result(name, drive(solver, c.epsilon, c.max_level));
    }
    case Algorithm::Gim1: {
      Gim1Solver<double> solver(load_gim1(c), c.solver);
      return from_result(name, drive(solver, c.epsilon, c.max_level));
    }
    case Algorithm::Oracle:
      return exact(name, c.max_level,
                   oracle_levels(load(c), parse_augmentation(c.augmentation), c.max_level));
    case Algorithm::Takine:
      return exact(name, c.takine_s,
                   takine_conditional(load(c), c.takine_n, c.takine_s,
                                      parse_variant(c.takine_variant), c.solver));
    case Algorithm::QbdR:
      return exact(name, c.qbd_n + c.qbd_l, qbd_r_stationary(load(c), c.qbd_n, c.qbd_l));
  }
  throw Error(ErrorKind::InvalidInput, "unknown algorithm");
}

std::vector<RowVectorXd> stage_output(const RunConfig& c, Index s) {
  switch (c.algorithm) {
    case Algorithm::Upper: {
      UpperSolver<double> solver(load(c), parse_augmentation(c.augmentation), c.solver);
      while (solver.stage() < s) solver.advance();
      return solver.levels();
    }
    case Algorithm::Lower: {
      LowerSolver<double> solver(load(c), c.schedule, c.solver);
      solver.compute_stage(s);
      return solver.levels();
    }
    case Algorithm::Gim1: {
      Gim1Solver<double> solver(load_gim1(c), c.solver);
      while (solver.stage() < s) solver.advance();
      return solver.levels();
    }
    case Algorithm::Oracle:
      return oracle_levels(load(c), parse_augmentation(c.augmentation), s);
    default:
      throw Error(ErrorKind::InvalidInput,
                  "stagewise output is available for upper, lower, gim1 and oracle");
  }
}

namespace {

Comparison compare_levels(const std::vector<RowVectorXd>& a, const std::vector<RowVectorXd>& b) {
  Comparison cmp;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) {
    double d = 0;
    if (k < a.size() && k < b.size()) {
      if (a[k].size() != b[k].size())
        throw Error(ErrorKind::ShapeMismatch, "level " + std::to_string(k) + " has " +
                                                  std::to_string(a[k].size()) + " vs " +
                                                  std::to_string(b[k].size()) + " phases");
      d = (a[k] - b[k]).cwiseAbs().sum();
    } else {
      d = (k < a.size() ? a[k] : b[k]).cwiseAbs().sum();
    }
    cmp.per_level.push_back(d);
    cmp.total += d;
  }
  return cmp;
}

}  // namespace

Comparison compare(const RunConfig& a, const RunConfig& b, bool stagewise) {
  if (!stagewise) return compare_levels(run(a).levels, run(b).levels);
  const Index last = std::min(a.max_level, b.max_level);
  Comparison cmp;
  // Streams are advanced once rather than restarted for every stage.
  std::vector<std::vector<RowVectorXd>> outs[2];
  const RunConfig* cfgs[2] = {&a, &b};
  for (int side = 0; side < 2; ++side) {
    const RunConfig& c = *cfgs[side];
    auto& o = outs[side];
    if (c.algorithm == Algorithm::Upper) {
      UpperSolver<double> solver(load(c), parse_augmentation(c.augmentation), c.solver);
      for (Index s = 0; s <= last; ++s) {
        solver.advance();
        o.push_back(solver.levels());
      }
    } else if (c.algorithm == Algorithm::Gim1) {
      Gim1Solver<double> solver(load_gim1(c), c.solver);
      for (Index s = 0; s <= last; ++s) {
        solver.advance();
        o.push_back(solver.levels());
      }
    } else {
      for (Index s = 0; s <= last; ++s) o.push_back(stage_output(c, s));
    }
  }
  for (Index s = 0; s <= last; ++s) {
    auto step = compare_levels(outs[0][s], outs[1][s]);
    cmp.stagewise.emplace_back(s, step.total);
    if (s == last) {
      cmp.per_level = std::move(step.per_level);
      cmp.total = step.total;
    }
  }
  return cmp;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stationary distributions of block-structured Markov chains"};
  app.require_subcommand(1);

  RawConfig run_raw;
  auto* run_cmd = app.add_subcommand("run", "Solve one model");
  add_model_flags(*run_cmd, run_raw);
  add_solver_flags(*run_cmd, run_raw, "");
  run_cmd->add_option("--format", run_raw.format, "json | csv")->capture_default_str();

  RawConfig a_raw, b_raw;
  bool stagewise = false;
  auto* cmp_cmd = app.add_subcommand("compare", "Distance between two configurations");
  add_model_flags(*cmp_cmd, a_raw);
  add_solver_flags(*cmp_cmd, a_raw, "a-");
  add_solver_flags(*cmp_cmd, b_raw, "b-");
  cmp_cmd->add_flag("--stagewise", stagewise, "Compare every stage 0..max-level");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    apply_thread_cap();
    if (run_cmd->parsed()) {
      const RunConfig config = run_raw.resolve();
      const RunOutput result = run(config);
      emit(out, result, config.format);
      const int code = exit_code(result);
      if (code == 2) err << "warning: max level reached before convergence; result is approximate\n";
      if (code == 1) err << "error: " << result.report.failure << '\n';
      return code;
    }
    b_raw.builtin = a_raw.builtin;
    b_raw.model_path = a_raw.model_path;
    b_raw.params = a_raw.params;
    const Comparison cmp = compare(a_raw.resolve(), b_raw.resolve(), stagewise);
    nlohmann::json doc;
    doc["total_tv"] = cmp.total;
    doc["per_level"] = cmp.per_level;
    if (stagewise) {
      nlohmann::json stages = nlohmann::json::array();
      for (const auto& [s, tv] : cmp.stagewise) stages.push_back({{"s", s}, {"tv", tv}});
      doc["stages"] = std::move(stages);
    }
    out << doc.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mipform::cli
