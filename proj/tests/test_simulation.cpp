#include "doctest.h"

#include <cmath>
#include <nlohmann/json.hpp>

#include "prevalid/rng.hpp"
#include "prevalid/simulation.hpp"

using namespace prevalid;

namespace {

ScenarioConfig linear_null(int n, int p) {
  ScenarioConfig c;
  c.scenario = Scenario::linear_linear;
  c.n = n;
  c.p = p;
  c.e = 1;
  c.beta = Eigen::VectorXd::Zero(p);
  c.num_folds = 5;
  return c;
}

}  // namespace

TEST_CASE("scenario strings round trip") {
  for (Scenario s :
       {Scenario::linear_linear, Scenario::lasso_linear, Scenario::lda_logistic}) {
    CHECK(scenario_from_string(to_string(s)) == s);
  }
  CHECK_THROWS(scenario_from_string("nope"));
}

TEST_CASE("linear generator moments match the model") {
  ScenarioConfig c = linear_null(4000, 3);
  c.sigma_I = 1.0;
  c.sigma_E = 2.0;
  c.beta << 1.0, -1.0, 0.5;
  Rng rng(301);
  const Dataset d = gen_linear_linear(c, rng);
  REQUIRE(d.X.rows() == 4000);
  REQUIRE(d.Z.cols() == 1);

  // X entries standard normal: mean 0, var 1 (SE of var ~ sqrt(2/N))
  const double xm = d.X.mean();
  const double xv = (d.X.array() - xm).square().mean();
  CHECK(std::abs(xm) < 4.0 / std::sqrt(12000.0));
  CHECK(std::abs(xv - 1.0) < 4.0 * std::sqrt(2.0 / 12000.0));

  // response residual y - X beta has SD sigma_I
  const Eigen::VectorXd resid = d.y - d.X * c.beta;
  const double rv = (resid.array() - resid.mean()).square().mean();
  CHECK(std::abs(rv - 1.0) < 4.0 * std::sqrt(2.0 / 4000.0));

  // external predictor: Z = y + sigma_E * noise
  const Eigen::VectorXd zr = d.Z.col(0) - d.y;
  const double zv = (zr.array() - zr.mean()).square().mean();
  CHECK(std::abs(zv - 4.0) < 4.0 * 4.0 * std::sqrt(2.0 / 4000.0));
}

TEST_CASE("lasso generator places signal on the first s coordinates") {
  ScenarioConfig c;
  c.scenario = Scenario::lasso_linear;
  c.n = 2000;
  c.p = 10;
  c.e = 1;
  c.s = 3;
  c.beta = Eigen::VectorXd::Zero(10);
  c.beta.head(3) << 2.0, 2.0, 2.0;
  c.l = 3;
  c.num_folds = 5;
  Rng rng(302);
  const Dataset d = gen_lasso_linear(c, rng);
  // regression recovers the sparse signal
  const Eigen::VectorXd bhat =
      (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * d.y);
  for (int j = 0; j < 3; ++j) CHECK(bhat[j] == doctest::Approx(2.0).epsilon(0.1));
  for (int j = 3; j < 10; ++j) CHECK(std::abs(bhat[j]) < 0.15);
}

TEST_CASE("lda generator flips external labels at the configured rate") {
  ScenarioConfig c;
  c.scenario = Scenario::lda_logistic;
  c.n = 4000;
  c.p = 5;
  c.e = 1;
  c.s = 2;
  c.mu = 1.0;
  c.g = 2;
  c.p_flip = 0.3;
  c.num_folds = 5;
  Rng rng(303);
  const Dataset d = gen_lda_logistic(c, rng);
  REQUIRE(d.outcome_kind == OutcomeKind::binary);
  // group sizes default to n/2 each
  CHECK(d.y.sum() == doctest::Approx(2000.0));
  int flips = 0;
  for (int i = 0; i < 4000; ++i)
    if (d.Z(i, 0) != d.y[i]) ++flips;
  const double rate = flips / 4000.0;
  CHECK(std::abs(rate - 0.3) < 4.0 * std::sqrt(0.3 * 0.7 / 4000.0));

  // p_flip = 0 reproduces the labels exactly
  c.p_flip = 0.0;
  Rng rng2(304);
  const Dataset exact = gen_lda_logistic(c, rng2);
  CHECK((exact.Z.col(0) - exact.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lda signal genes have the configured group-mean offset") {
  ScenarioConfig c;
  c.scenario = Scenario::lda_logistic;
  c.n = 4000;
  c.p = 4;
  c.e = 1;
  c.s = 2;
  c.mu = 0.8;
  c.g = 2;
  c.p_flip = 0.1;
  c.num_folds = 5;
  Rng rng(305);
  const Dataset d = gen_lda_logistic(c, rng);
  for (int j = 0; j < 4; ++j) {
    double m0 = 0, m1 = 0;
    int n0 = 0, n1c = 0;
    for (int i = 0; i < 4000; ++i) {
      if (d.y[i] > 0.5) {
        m1 += d.X(i, j);
        ++n1c;
      } else {
        m0 += d.X(i, j);
        ++n0;
      }
    }
    const double gap = m1 / n1c - m0 / n0;
    const double target = j < 2 ? 0.8 : 0.0;
    CHECK(std::abs(gap - target) < 4.0 * std::sqrt(2.0 / 2000.0));
  }
}

TEST_CASE("is_null reflects the signal parameters") {
  ScenarioConfig c = linear_null(20, 3);
  CHECK(c.is_null());
  c.beta[0] = 0.5;
  CHECK_FALSE(c.is_null());

  ScenarioConfig lda;
  lda.scenario = Scenario::lda_logistic;
  lda.n = 20;
  lda.p = 5;
  lda.s = 2;
  lda.g = 2;
  lda.mu = 0.0;
  CHECK(lda.is_null());
  lda.mu = 0.5;
  CHECK_FALSE(lda.is_null());
}

TEST_CASE("scenario config JSON round trip") {
  ScenarioConfig c;
  c.scenario = Scenario::lasso_linear;
  c.n = 10;
  c.p = 100;
  c.e = 1;
  c.s = 5;
  c.beta = Eigen::VectorXd::Zero(100);
  c.beta.head(5).setConstant(0.5);
  c.sigma_I = 1.5;
  c.sigma_E = 2.5;
  c.l = 5;
  c.num_folds = 5;
  c.include_intercept = true;
  const ScenarioConfig back = ScenarioConfig::from_json(c.to_json());
  CHECK(back.scenario == c.scenario);
  CHECK(back.n == c.n);
  CHECK(back.p == c.p);
  CHECK(back.s == c.s);
  CHECK(back.l == c.l);
  CHECK(back.sigma_I == c.sigma_I);
  CHECK(back.sigma_E == c.sigma_E);
  CHECK(back.include_intercept == c.include_intercept);
  CHECK(back.beta.size() == c.beta.size());
  CHECK((back.beta - c.beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validate rejects inconsistent configurations") {
  ScenarioConfig c = linear_null(20, 3);
  CHECK_NOTHROW(c.validate());
  c.num_folds = 0;
  CHECK_THROWS(c.validate());
  c.num_folds = 5;
  c.beta.resize(2);
  CHECK_THROWS(c.validate());
}

TEST_CASE("type I report is byte-identical across worker counts") {
  ScenarioConfig c = linear_null(15, 3);
  const std::vector<double> alphas{0.05, 0.1};
  const auto a = estimate_type1(c, alphas, 200, 401, 1);
  const auto b = estimate_type1(c, alphas, 200, 401, 4);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.rates == b.rates);
  CHECK_FALSE(a.flagged);
}

TEST_CASE("type I rate is sane on an easy null") {
  ScenarioConfig c = linear_null(50, 3);
  c.num_folds = 10;
  c.include_intercept = true;
  const auto rep = estimate_type1(c, {0.05}, 1000, 402);
  REQUIRE(rep.rates.size() == 1);
  // conservative test: rate should be below ~3 SE above nominal
  CHECK(rep.rates[0] < 0.05 + 3.0 * 0.007);
  CHECK(rep.rates[0] >= 0.0);
}

TEST_CASE("bias study reports a downward-biased PV coefficient under shrinkage") {
  ScenarioConfig c;
  c.scenario = Scenario::linear_linear;
  c.n = 20;
  c.p = 5;
  c.e = 1;
  c.beta = Eigen::VectorXd::Constant(5, 0.4);
  c.num_folds = 5;
  c.include_intercept = true;
  const auto rep = coefficient_bias_study(c, 300, 403);
  CHECK(rep.reps == 300);
  CHECK(rep.bias == doctest::Approx(rep.median_pv - rep.median_benchmark));
  CHECK(rep.bias_se > 0.0);
  CHECK(rep.median_pv <= rep.median_benchmark + 2.0 * rep.bias_se);
}

TEST_CASE("permutation level report smoke") {
  ScenarioConfig c = linear_null(15, 3);
  const auto rep = estimate_permutation_level(c, {0.1}, 60, 50, 404);
  REQUIRE(rep.rates.size() == 3);
  for (const auto& row : rep.rates) {
    REQUIRE(row.size() == 1);
    CHECK(row[0] >= 0.0);
    CHECK(row[0] <= 1.0);
  }
  CHECK(rep.outer_reps == 60);
  CHECK(rep.B == 50);
}

TEST_CASE("power report smoke with ordered components") {
  ScenarioConfig nullc = linear_null(20, 4);
  ScenarioConfig altc = nullc;
  altc.beta = Eigen::VectorXd::Constant(4, 0.6);
  const auto rep = estimate_power(nullc, altc, {0.05}, 150, 80, 405);
  REQUIRE(rep.analytical_power.size() == 1);
  REQUIRE(rep.permutation_power.size() == 1);
  CHECK(rep.adjusted_cutoffs[0] > 0.0);
  CHECK(rep.analytical_power[0] > 0.2);  // strong signal: clearly above level
  CHECK(rep.permutation_power[0] > 0.2);
}
