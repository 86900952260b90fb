#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mipform/catalog.hpp"
#include "mipform/truncation.hpp"
#include "support.hpp"

using namespace mipform;
using Spec = AugmentationSpec<double>;

namespace {

MatrixXd q2() {
  MatrixXd q(2, 2);
  q << -1, 1, 2, -3;
  return q;
}

RowVectorXd row(std::initializer_list<double> xs) {
  RowVectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

double max_abs(const MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::ParseError;
}

}  // namespace

TEST_CASE("augmented_generator examples") {
  const MatrixXd one = MatrixXd::Constant(1, 1, -1.0);
  CHECK(augmented_generator<double>(one, Spec::unit_column(0))(0, 0) == 0.0);

  MatrixXd want0(2, 2), want1(2, 2);
  want0 << -1, 1, 3, -3;
  want1 << -1, 1, 2, -2;
  CHECK(augmented_generator<double>(q2(), Spec::unit_column(0)) == want0);
  CHECK(augmented_generator<double>(q2(), Spec::unit_column(1)) == want1);

  CHECK(kind_of([] { augmented_generator<double>(q2(), row({0.5, 0.25, 0.25})); }) ==
        ErrorKind::InvalidAlpha);
  CHECK(kind_of([] { augmented_generator<double>(q2(), row({1.5, -0.5})); }) ==
        ErrorKind::InvalidAlpha);
  CHECK(kind_of([] { augmented_generator<double>(q2(), Spec::unit_column(2)); }) ==
        ErrorKind::InvalidAlpha);
}

TEST_CASE("augmentation specs resolve to probability vectors") {
  CHECK(Spec::unit_column(2).resolve(4) == row({0, 0, 1, 0}));
  CHECK(Spec::uniform_last_level().resolve(5, 2) == row({0, 0, 0, 0.5, 0.5}));
  CHECK(Spec::custom(row({0.25, 0.75})).resolve(2) == row({0.25, 0.75}));
  CHECK(kind_of([] { Spec::custom(row({0.5, 0.6})).resolve(2); }) == ErrorKind::InvalidAlpha);
  CHECK(kind_of([] { Spec::custom(row({0.5})).resolve(2); }) == ErrorKind::InvalidAlpha);
}

TEST_CASE("solve_truncation examples") {
  const auto one = solve_truncation<double>(MatrixXd::Constant(1, 1, -1.0), Spec::unit_column(0));
  CHECK(one.fundamental(0, 0) == 1.0);
  CHECK(one.normalized_fundamental(0, 0) == 1.0);
  CHECK(one.pi_bar(0) == 1.0);
  CHECK(one.beta(0) == 1.0);

  const auto sol = solve_truncation<double>(q2(), Spec::unit_column(0));
  MatrixXd fund(2, 2), f(2, 2);
  fund << 3, 1, 2, 1;
  f << 0.75, 0.25, 2.0 / 3, 1.0 / 3;
  CHECK(sol.n == 1);
  CHECK(max_abs(sol.fundamental - fund) < 1e-14);
  CHECK(max_abs(sol.normalized_fundamental - f) < 1e-15);
  CHECK(testing_support::tv(sol.pi_bar, row({0.75, 0.25})) < 1e-15);

  const auto sol1 = solve_truncation<double>(q2(), Spec::unit_column(1));
  CHECK(testing_support::tv(sol1.pi_bar, row({2.0 / 3, 1.0 / 3})) < 1e-15);
}

TEST_CASE("column_augmented_stationary is a row of F") {
  CHECK(column_augmented_stationary<double>(MatrixXd::Constant(1, 1, -1.0), 0)(0) == 1.0);
  CHECK(testing_support::tv(column_augmented_stationary<double>(q2(), 0), row({0.75, 0.25})) <
        1e-15);
  CHECK(testing_support::tv(column_augmented_stationary<double>(q2(), 1),
                            row({2.0 / 3, 1.0 / 3})) < 1e-15);
  CHECK(kind_of([] { column_augmented_stationary<double>(q2(), 2); }) ==
        ErrorKind::IndexOutOfRange);

  const MatrixXd q = nw_corner(mg1_type(0.5, 1.5), 6);
  const auto sol = solve_truncation<double>(q, Spec::unit_column(0));
  for (Index nu = 0; nu < q.rows(); ++nu) {
    const RowVectorXd r = column_augmented_stationary<double>(q, nu);
    CHECK(r == RowVectorXd(sol.normalized_fundamental.row(nu)));
    CHECK(r == solve_truncation<double>(q, Spec::unit_column(nu)).pi_bar);
  }
}

TEST_CASE("oracle_stationary examples") {
  CHECK(oracle_stationary<double>(MatrixXd::Zero(1, 1))(0) == 1.0);
  MatrixXd a(2, 2), b(2, 2);
  a << -1, 1, 3, -3;
  b << -1, 1, 2, -2;
  CHECK(testing_support::tv(oracle_stationary<double>(a), row({0.75, 0.25})) < 1e-15);
  CHECK(testing_support::tv(oracle_stationary<double>(b), row({2.0 / 3, 1.0 / 3})) < 1e-15);
  // Two closed classes: the system is rank deficient.
  MatrixXd two = MatrixXd::Zero(2, 2);
  CHECK(kind_of([&] { oracle_stationary<double>(two); }) == ErrorKind::SingularMatrix);
}

TEST_CASE("conditional_measure examples") {
  CHECK(conditional_measure<double>(MatrixXd::Constant(1, 1, -1.0), Spec::unit_column(0), {0})(0) ==
        1.0);
  CHECK(testing_support::tv(conditional_measure<double>(q2(), Spec::unit_column(1), {0, 1}),
                            row({2.0 / 3, 1.0 / 3})) < 1e-15);

  const MatrixXd q = nw_corner(mm1(1, 2), 12);
  const RowVectorXd mu = conditional_measure<double>(q, Spec::unit_column(12), {0, 1});
  CHECK(testing_support::tv(mu, row({2.0 / 3, 1.0 / 3})) < 1e-6);

  // State 2 is unreachable from state 0 before absorption.
  MatrixXd blocked(3, 3);
  blocked << -2, 1, 0,  //
      1, -2, 0,         //
      0, 1, -2;
  CHECK(kind_of([&] { conditional_measure<double>(blocked, Spec::unit_column(0), {2}); }) ==
        ErrorKind::ZeroMass);
  CHECK(kind_of([&] { conditional_measure<double>(blocked, Spec::unit_column(0), {3}); }) ==
        ErrorKind::IndexOutOfRange);
}

TEST_CASE("solution invariants on catalog models") {
  const std::vector<BlockGenerator<double>> models = {
      mm1(1, 2), level_dep_qbd(1, 1, 3), mg1_type(0.5, 1.5), to_block_generator(gim1_type(1, 1)),
      catastrophe_qbd(1, 1.5, 0.2)};
  for (const auto& model : models) {
    for (Index s : {0, 3, 10, 20}) {
      const MatrixXd q = nw_corner(model, s);
      const Index n = q.rows() - 1;
      for (const Spec& spec :
           {Spec::unit_column(0), Spec::unit_column(n), Spec::uniform_last_level()}) {
        const auto sol = solve_truncation<double>(q, spec, model.level_size(s));
        CHECK(sol.normalized_fundamental.minCoeff() >= 0.0);
        CHECK((sol.normalized_fundamental.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
        CHECK(sol.pi_bar.minCoeff() >= 0.0);
        CHECK(std::abs(sol.pi_bar.sum() - 1.0) < 1e-10);
        CHECK(std::abs(sol.beta.sum() - 1.0) < 1e-10);
        CHECK(testing_support::tv(sol.beta * sol.normalized_fundamental, sol.pi_bar) < 1e-10);
        const MatrixXd qbar = augmented_generator<double>(q, spec, model.level_size(s));
        CHECK((qbar.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(max_abs(sol.pi_bar * qbar) < 1e-9);
        CHECK(testing_support::tv(sol.pi_bar, oracle_stationary<double>(qbar)) < 1e-9);
        const RowVectorXd single = augmented_stationary<double>(q, spec.resolve(n + 1, model.level_size(s)));
        CHECK(testing_support::tv(sol.pi_bar, single) < 1e-12);
      }
    }
  }
}

TEST_CASE("rows of F approach the stationary vector of mm1") {
  // Conditional of the geometric law on {0..10}.
  RowVectorXd target = testing_support::geometric(0.5, 10);
  target /= target.sum();
  double previous = 1e9;
  for (Index n = 20; n <= 80; n += 10) {
    const MatrixXd f =
        solve_truncation<double>(nw_corner(mm1(1, 2), n), Spec::unit_column(0)).normalized_fundamental;
    double worst = 0;
    for (Index nu = 0; nu <= 5; ++nu) {
      RowVectorXd head = f.row(nu).head(11);
      head /= head.sum();
      worst = std::max(worst, testing_support::tv(head, target));
    }
    CHECK(worst <= previous + 1e-15);
    previous = worst;
  }
  CHECK(previous < 1e-6);
}
