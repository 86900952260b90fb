#pragma once

#include <map>
#include <string>
#include <vector>

#include "mipform/model.hpp"

namespace mipform {

using Params = std::map<std::string, double>;

/// Built-in models by name:
///   mm1             lambda, mu
///   level_dep_qbd   lambda, mu, c            (M/M/c queue)
///   mg1_type        lambda, mu, p=0.5, max_jump=4
///                   (geometric batch arrivals, two-phase Erlang service)
///   gim1_type       lambda, mu, p=0.5, max_jump=3, r=1
///                   (geometric batch services, two-phase modulated service rate)
///   catastrophe_qbd lambda, mu, gamma        (M/M/1 with resets to level 0)
/// Unstable parameter choices are rejected with UnstableParams.
BlockGenerator<double> builtin_model(const std::string& name, const Params& params);

/// The blocks of the gim1_type model.
Gim1Blocks<double> builtin_gim1(const Params& params);

std::vector<std::string> builtin_names();

BlockGenerator<double> mm1(double lambda, double mu);
BlockGenerator<double> level_dep_qbd(double lambda, double mu, int servers);
BlockGenerator<double> mg1_type(double lambda, double mu, double p = 0.5, int max_jump = 4);
Gim1Blocks<double> gim1_type(double lambda, double mu, double p = 0.5, int max_jump = 3,
                             double switching = 1.0);
BlockGenerator<double> catastrophe_qbd(double lambda, double mu, double gamma);

}  // namespace mipform
