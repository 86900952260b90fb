#include "mipform/catalog.hpp"

#include <cmath>
#include <set>

namespace mipform {

namespace {

using Block = MatrixXd;

Block scalar(double x) { return Block::Constant(1, 1, x); }

void require_positive(double x, const char* name) {
  if (!(x > 0) || !std::isfinite(x))
    throw Error(ErrorKind::InvalidInput, std::string(name) + " must be positive and finite");
}

/// Truncated geometric weights w_j proportional to p^(j-1), j = 1..max_jump.
std::vector<double> batch_weights(double p, int max_jump) {
  if (!(p >= 0 && p < 1)) throw Error(ErrorKind::InvalidInput, "p must lie in [0, 1)");
  if (max_jump < 1) throw Error(ErrorKind::InvalidInput, "max_jump must be at least 1");
  std::vector<double> w(static_cast<std::size_t>(max_jump));
  double total = 0;
  for (int j = 0; j < max_jump; ++j) total += (w[static_cast<std::size_t>(j)] = std::pow(p, j));
  for (double& x : w) x /= total;
  return w;
}

double mean_batch(const std::vector<double>& w) {
  double m = 0;
  for (std::size_t j = 0; j < w.size(); ++j) m += static_cast<double>(j + 1) * w[j];
  return m;
}

BlockGenerator<double>::Options banded(Index low, Index high) {
  BlockGenerator<double>::Options o;
  o.band_low = low;
  o.band_high = high;
  return o;
}

double get(const Params& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) throw Error(ErrorKind::MissingParam, "parameter '" + key + "' is required");
  return it->second;
}

double get_or(const Params& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

int get_int(const Params& params, const std::string& key, std::optional<double> fallback) {
  const double x = fallback ? get_or(params, key, *fallback) : get(params, key);
  if (x != std::floor(x) || std::abs(x) > 1e9)
    throw Error(ErrorKind::InvalidInput, "parameter '" + key + "' must be an integer");
  return static_cast<int>(x);
}

void reject_unknown(const Params& params, std::initializer_list<const char*> known) {
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& [key, value] : params)
    if (!names.count(key))
      throw Error(ErrorKind::InvalidInput, "unknown parameter '" + key + "'");
}

}  // namespace

BlockGenerator<double> mm1(double lambda, double mu) {
  require_positive(lambda, "lambda");
  require_positive(mu, "mu");
  if (lambda >= mu) throw Error(ErrorKind::UnstableParams, "mm1 needs lambda < mu");
  auto provider = [lambda, mu](Index k, Index l) -> Block {
    if (l == k + 1) return scalar(lambda);
    if (l == k - 1) return scalar(mu);
    return scalar(k == 0 ? -lambda : -(lambda + mu));
  };
  return {LevelSizes{{}, 1}, provider, banded(1, 1)};
}

BlockGenerator<double> level_dep_qbd(double lambda, double mu, int servers) {
  require_positive(lambda, "lambda");
  require_positive(mu, "mu");
  if (servers < 1) throw Error(ErrorKind::InvalidInput, "c must be at least 1");
  if (lambda >= servers * mu) throw Error(ErrorKind::UnstableParams, "level_dep_qbd needs lambda < c mu");
  auto provider = [lambda, mu, servers](Index k, Index l) -> Block {
    const double down = static_cast<double>(std::min<Index>(k, servers)) * mu;
    if (l == k + 1) return scalar(lambda);
    if (l == k - 1) return scalar(down);
    return scalar(-(lambda + down));
  };
  return {LevelSizes{{}, 1}, provider, banded(1, 1)};
}

BlockGenerator<double> mg1_type(double lambda, double mu, double p, int max_jump) {
  require_positive(lambda, "lambda");
  require_positive(mu, "mu");
  const auto w = batch_weights(p, max_jump);
  if (lambda * mean_batch(w) >= mu)
    throw Error(ErrorKind::UnstableParams, "mg1_type needs lambda * E[batch] < mu");
  // Level 0 is the idle state; levels k >= 1 carry the Erlang-2 service phase.
  auto provider = [lambda, mu, w](Index k, Index l) -> Block {
    const double phase = 2 * mu;
    if (k == 0) {
      if (l == 0) return scalar(-lambda);
      Block b = Block::Zero(1, 2);
      b(0, 0) = lambda * w[static_cast<std::size_t>(l - 1)];
      return b;
    }
    if (l == k - 1) {
      Block b = Block::Zero(2, l == 0 ? 1 : 2);
      b(1, 0) = phase;
      return b;
    }
    if (l == k) {
      Block b(2, 2);
      b << -(lambda + phase), phase, 0, -(lambda + phase);
      return b;
    }
    return lambda * w[static_cast<std::size_t>(l - k - 1)] * Block::Identity(2, 2);
  };
  return {LevelSizes{{1}, 2}, provider, banded(1, max_jump)};
}

Gim1Blocks<double> gim1_type(double lambda, double mu, double p, int max_jump, double switching) {
  require_positive(lambda, "lambda");
  require_positive(mu, "mu");
  require_positive(switching, "r");
  const auto w = batch_weights(p, max_jump);
  if (lambda >= mu * mean_batch(w))
    throw Error(ErrorKind::UnstableParams, "gim1_type needs lambda < mu * E[batch]");
  const Eigen::Vector2d rate(1.5 * mu, 0.5 * mu);

  Gim1Blocks<double> g;
  g.boundary_size = 1;
  g.interior_size = 2;
  g.max_down = max_jump;
  g.A = [lambda, switching, rate, w](Index i) -> Block {
    if (i == 1) return lambda * Block::Identity(2, 2);
    if (i == 0) {
      Block a(2, 2);
      a << -(switching + lambda + rate(0)), switching, switching, -(switching + lambda + rate(1));
      return a;
    }
    return w[static_cast<std::size_t>(-i - 1)] * Block(rate.asDiagonal());
  };
  g.B = [lambda, rate, w](Index i) -> Block {
    if (i == 0) return scalar(-lambda);
    if (i == 1) return Block::Constant(1, 2, 0.5 * lambda);
    double tail = 0;
    for (std::size_t j = static_cast<std::size_t>(-i - 1); j < w.size(); ++j) tail += w[j];
    return Block(rate * tail);
  };
  return g;
}

BlockGenerator<double> catastrophe_qbd(double lambda, double mu, double gamma) {
  require_positive(lambda, "lambda");
  require_positive(mu, "mu");
  if (!(gamma >= 0) || !std::isfinite(gamma))
    throw Error(ErrorKind::InvalidInput, "gamma must be nonnegative and finite");
  if (gamma == 0 && lambda >= mu)
    throw Error(ErrorKind::UnstableParams, "catastrophe_qbd without resets needs lambda < mu");
  auto provider = [lambda, mu, gamma](Index k, Index l) -> Block {
    if (l == k + 1) return scalar(lambda);
    if (l == k) return scalar(k == 0 ? -lambda : -(lambda + mu + gamma));
    double rate = 0;
    if (l == k - 1) rate += mu;
    if (l == 0) rate += gamma;
    return scalar(rate);
  };
  BlockGenerator<double>::Options o;
  o.band_low = std::nullopt;
  o.band_high = 1;
  return {LevelSizes{{}, 1}, provider, o};
}

std::vector<std::string> builtin_names() {
  return {"mm1", "level_dep_qbd", "mg1_type", "gim1_type", "catastrophe_qbd"};
}

Gim1Blocks<double> builtin_gim1(const Params& params) {
  reject_unknown(params, {"lambda", "mu", "p", "max_jump", "r"});
  return gim1_type(get(params, "lambda"), get(params, "mu"), get_or(params, "p", 0.5),
                   get_int(params, "max_jump", 3.0), get_or(params, "r", 1.0));
}

BlockGenerator<double> builtin_model(const std::string& name, const Params& params) {
  if (name == "mm1") {
    reject_unknown(params, {"lambda", "mu"});
    return mm1(get(params, "lambda"), get(params, "mu"));
  }
  if (name == "level_dep_qbd") {
    reject_unknown(params, {"lambda", "mu", "c"});
    return level_dep_qbd(get(params, "lambda"), get(params, "mu"), get_int(params, "c", {}));
  }
  if (name == "mg1_type") {
    reject_unknown(params, {"lambda", "mu", "p", "max_jump"});
    return mg1_type(get(params, "lambda"), get(params, "mu"), get_or(params, "p", 0.5),
                    get_int(params, "max_jump", 4.0));
  }
  if (name == "gim1_type") return to_block_generator(builtin_gim1(params));
  if (name == "catastrophe_qbd") {
    reject_unknown(params, {"lambda", "mu", "gamma"});
    return catastrophe_qbd(get(params, "lambda"), get(params, "mu"), get(params, "gamma"));
  }
  throw Error(ErrorKind::UnknownModel, "no built-in model named '" + name + "'");
}

}  // namespace mipform
