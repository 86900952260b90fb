#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "mipform/cli.hpp"
#include "support.hpp"

using namespace mipform;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(MIPFORM_TEST_DATA) + "/" + name; }

/// Runs the installed binary through the shell; returns exit status and stdout.
Outcome shell(const std::string& env, const std::string& args) {
  const std::string cmd = env + " '" + MIPFORM_CLI_PATH + "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, ""};
}

RowVectorXd flatten(const json& levels) {
  std::vector<double> xs;
  for (const auto& row : levels)
    for (const auto& x : row) xs.push_back(x.get<double>());
  return Eigen::Map<RowVectorXd>(xs.data(), static_cast<Index>(xs.size()));
}

const std::vector<std::string> kMm1 = {"--builtin", "mm1", "--param", "lambda=1", "--param", "mu=2"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("run upper on mm1") {
  const auto r = call(with({"run"}, with(kMm1, {"--algorithm", "upper", "--epsilon", "1e-8"})));
  CHECK(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["status"] == "Converged");
  CHECK(doc["algorithm"] == "upper");
  const RowVectorXd pi = flatten(doc["levels"]);
  CHECK(testing_support::tv(pi, testing_support::geometric(0.5, pi.size() - 1)) <= 1e-6);
  CHECK(doc["report"]["stages"].size() == static_cast<std::size_t>(doc["stage"].get<Index>() + 1));
}

TEST_CASE("oracle at a fixed level matches the upper solver at that stage") {
  const auto o = call(with({"run"}, with(kMm1, {"--algorithm", "oracle", "--max-level", "30"})));
  CHECK(o.code == 0);
  const json doc = json::parse(o.out);
  CHECK(doc["status"] == "Exact");
  CHECK(doc["levels"].size() == 31);

  cli::RunConfig c;
  c.builtin = "mm1";
  c.params = {{"lambda", 1}, {"mu", 2}};
  c.algorithm = cli::Algorithm::Upper;
  const auto staged = cli::stage_output(c, 30);
  CHECK(testing_support::tv(flatten(doc["levels"]), join_levels(staged)) <= 1e-12);
}

TEST_CASE("max level stops with exit code 2 and still emits the result") {
  const auto r = call(with({"run"}, with(kMm1, {"--epsilon", "1e-12", "--max-level", "4"})));
  CHECK(r.code == 2);
  const json doc = json::parse(r.out);
  CHECK(doc["status"] == "MaxLevelReached");
  CHECK(doc["levels"].size() == 5);
  CHECK(r.err.find("approximate") != std::string::npos);
}

TEST_CASE("errors exit with code 1 and name the error") {
  const auto bad = call({"run", "--model", data("overlap.json")});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("ParseError") != std::string::npos);

  const auto wrong = call({"run", "--builtin", "catastrophe_qbd", "--param", "lambda=1", "--param",
                           "mu=1.5", "--param", "gamma=0.2", "--algorithm", "upper"});
  CHECK(wrong.code == 1);
  CHECK(wrong.err.find("IncompatibleStructure") != std::string::npos);

  const auto alpha = call(with({"run"}, with(kMm1, {"--augmentation", "unit:0"})));
  CHECK(alpha.code == 1);
  CHECK(alpha.err.find("InvalidAlpha") != std::string::npos);

  CHECK(call(with({"run"}, with(kMm1, {"--algorithm", "simplex"}))).code == 1);
  CHECK(call({"run", "--builtin", "mm1", "--param", "lambda=1"}).code == 1);
  CHECK(call({"run", "--builtin", "mm1", "--param", "lambda=2", "--param", "mu=1"}).err.find(
            "UnstableParams") != std::string::npos);
  CHECK(call({"frobnicate"}).code == 1);
}

TEST_CASE("every algorithm runs from the command line") {
  CHECK(call(with({"run"}, with(kMm1, {"--algorithm", "lower", "--schedule", "doubling"}))).code == 0);
  CHECK(call(with({"run"}, with(kMm1, {"--solver", "leboudec"}))).code == 0);
  CHECK(call({"run", "--builtin", "gim1_type", "--param", "lambda=1", "--param", "mu=1",
              "--algorithm", "gim1"})
            .code == 0);
  const auto t = call(with({"run"}, with(kMm1, {"--algorithm", "takine", "--takine-n", "3",
                                                "--takine-s", "60"})));
  REQUIRE(t.code == 0);
  RowVectorXd target = testing_support::geometric(0.5, 3);
  target /= target.sum();
  CHECK(testing_support::tv(flatten(json::parse(t.out)["levels"]), target) <= 1e-6);
  const auto q = call(with({"run"}, with(kMm1, {"--algorithm", "qbd-r"})));
  REQUIRE(q.code == 0);
  const RowVectorXd pi = flatten(json::parse(q.out)["levels"]);
  CHECK(std::abs(pi(3) - 1.0 / 16) <= 1e-8);
  CHECK(call({"run", "--model", data("two_phase_qbd.json"), "--algorithm", "lower"}).code == 0);
}

TEST_CASE("CSV output") {
  const auto r = call(with({"run"}, with(kMm1, {"--format", "csv", "--epsilon", "1e-4"})));
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "level,phase,probability");
  std::getline(lines, line);
  CHECK(line.rfind("0,0,", 0) == 0);
}

TEST_CASE("compare") {
  const auto same = call(with({"compare"}, with(kMm1, {"--a-algorithm", "upper", "--b-algorithm", "upper"})));
  REQUIRE(same.code == 0);
  CHECK(json::parse(same.out)["total_tv"].get<double>() == 0.0);

  const auto qbd = call({"compare", "--builtin", "level_dep_qbd", "--param", "lambda=1", "--param", "mu=1",
                         "--param", "c=3", "--a-algorithm", "upper", "--b-algorithm", "oracle",
                         "--a-max-level", "25", "--b-max-level", "25", "--stagewise"});
  REQUIRE(qbd.code == 0);
  const json qdoc = json::parse(qbd.out);
  CHECK(qdoc["stages"].size() == 26);
  for (const auto& st : qdoc["stages"]) CHECK(st["tv"].get<double>() <= 1e-9);

  const auto g = call({"compare", "--builtin", "gim1_type", "--param", "lambda=1", "--param", "mu=1",
                       "--a-algorithm", "gim1", "--b-algorithm", "lower", "--a-max-level", "20",
                       "--b-max-level", "20", "--stagewise"});
  REQUIRE(g.code == 0);
  for (const auto& st : json::parse(g.out)["stages"]) CHECK(st["tv"].get<double>() <= 1e-12);

  // Different level partitions cannot be compared.
  cli::RunConfig a, b;
  a.builtin = "mm1";
  a.params = {{"lambda", 1}, {"mu", 2}};
  a.algorithm = cli::Algorithm::Oracle;
  a.max_level = 5;
  b.model_path = data("two_phase_qbd.json");
  b.algorithm = cli::Algorithm::Oracle;
  b.max_level = 5;
  try {
    cli::compare(a, b, false);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
}

TEST_CASE("help lists the defaults") {
  const auto h = call({"run", "--help"});
  CHECK(h.code == 0);
  for (const char* needle : {"1e-08", "10000", "linear", "lu", "uniform-last-level", "json"})
    CHECK(h.out.find(needle) != std::string::npos);
}

TEST_CASE("the binary: exit codes and the thread cap") {
  const std::string mm1 = "run --builtin mm1 --param lambda=1 --param mu=2";
  const auto one = shell("", mm1);
  CHECK(one.code == 0);
  const auto capped = shell("HESSENBERG_MAX_THREADS=4", mm1);
  CHECK(capped.code == 0);
  // Timings differ between runs; the distribution must not.
  CHECK(json::parse(one.out)["levels"] == json::parse(capped.out)["levels"]);
  CHECK(shell("", mm1 + " --max-level 3 --epsilon 1e-12").code == 2);
  CHECK(shell("", "run --model '" + data("overlap.json") + "'").code == 1);
}
