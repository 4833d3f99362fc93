#include "doctest.h"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

#include "prevalid/internal_models.hpp"
#include "prevalid/rng.hpp"

using namespace prevalid;

namespace {

Eigen::MatrixXd random_matrix(int n, int p, Rng& rng) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  return X;
}

}  // namespace

TEST_CASE("fit_ols matches normal-equations oracle") {
  Rng rng(101);
  const Eigen::MatrixXd X = random_matrix(50, 5, rng);
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y[i] = rng.normal();
  const auto model = fit_ols(X, y);
  const Eigen::VectorXd oracle =
      (X.transpose() * X).ldlt().solve(X.transpose() * y);
  CHECK((model.coef - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit_ols on orthonormal columns gives X^T y") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(6, 3);
  X(0, 0) = X(2, 1) = X(4, 2) = 1.0;
  Eigen::VectorXd y(6);
  y << 3, 0, -2, 0, 7, 0;
  const auto model = fit_ols(X, y);
  CHECK((model.coef - X.transpose() * y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_ols recovers noiseless coefficients and rejects rank deficiency") {
  Rng rng(7);
  const Eigen::MatrixXd X = random_matrix(20, 4, rng);
  Eigen::VectorXd beta(4);
  beta << 1.5, -2.0, 0.25, 3.0;
  const auto model = fit_ols(X, X * beta);
  CHECK((model.coef - beta).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::MatrixXd Xdef = X;
  Xdef.col(3) = Xdef.col(0) + Xdef.col(1);
  CHECK_THROWS(fit_ols(Xdef, X * beta));
}

TEST_CASE("fit_lasso_l l=1 picks the dominant predictor") {
  Rng rng(9);
  Eigen::MatrixXd X = random_matrix(30, 6, rng);
  const Eigen::VectorXd y = 2.0 * X.col(3);
  const auto model = fit_lasso_l(X, y, 1);
  REQUIRE(model.selected.size() == 1);
  CHECK(model.selected[0] == 3);
  CHECK((model.coef.array() != 0.0).count() == 1);
}

TEST_CASE("fit_lasso_l resolves ties toward the lower index") {
  Rng rng(12);
  Eigen::MatrixXd X = random_matrix(25, 4, rng);
  X.col(1) = X.col(3);  // exact correlation tie between columns 1 and 3
  Eigen::VectorXd y = X.col(1) + 0.1 * X.col(0);
  const auto model = fit_lasso_l(X, y, 1);
  REQUIRE(model.selected.size() == 1);
  CHECK(model.selected[0] == 1);
}

TEST_CASE("fit_lasso_l with l = p equals fit_ols") {
  Rng rng(33);
  const Eigen::MatrixXd X = random_matrix(40, 6, rng);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.normal();
  const auto lasso = fit_lasso_l(X, y, 6);
  const auto ols = fit_ols(X, y);
  CHECK((lasso.coef - ols.coef).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fit_lasso_l satisfies the equiangular stop conditions") {
  // Independent oracle: at the returned point, the standardized residual
  // correlations of all active variables share a common magnitude that no
  // inactive variable exceeds, and exactly l coefficients are nonzero.
  Rng rng(55);
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 30, p = 100, l = 5;
    const Eigen::MatrixXd X = random_matrix(n, p, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal();
    const auto model = fit_lasso_l(X, y, l);

    CHECK((model.coef.array() != 0.0).count() == l);
    const Eigen::VectorXd resid = y - X * model.coef;
    std::vector<double> corr(p);
    for (int j = 0; j < p; ++j)
      corr[j] = std::abs(X.col(j).normalized().dot(resid));
    double active_level = 0.0;
    for (int j : model.selected) active_level = std::max(active_level, corr[j]);
    for (int j : model.selected) CHECK(corr[j] == doctest::Approx(active_level).epsilon(1e-7));
    for (int j = 0; j < p; ++j) {
      if (std::find(model.selected.begin(), model.selected.end(), j) !=
          model.selected.end())
        continue;
      CHECK(corr[j] <= active_level * (1.0 + 1e-7) + 1e-10);
    }
  }
}

TEST_CASE("centered regression spec fits an intercept") {
  Rng rng(71);
  const Eigen::MatrixXd X = random_matrix(25, 3, rng).rowwise() +
                            Eigen::RowVector3d(5.0, -2.0, 9.0);
  Eigen::VectorXd y(25);
  for (int i = 0; i < 25; ++i) y[i] = 4.0 + rng.normal();

  InternalModelSpec spec;
  spec.kind = ModelKind::ols;
  spec.center = true;
  const auto model = fit_internal(X, y, spec, 0);

  // oracle: least squares with an explicit intercept column
  Eigen::MatrixXd Xi(25, 4);
  Xi << X, Eigen::VectorXd::Ones(25);
  const Eigen::VectorXd full =
      (Xi.transpose() * Xi).ldlt().solve(Xi.transpose() * y);
  CHECK((model.coef - full.head(3)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(model.intercept == doctest::Approx(full[3]).epsilon(1e-9));
  const Eigen::VectorXd pred = predict(model, X);
  CHECK((pred - Xi * full).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fit_lda_top_g selects by largest absolute correlation") {
  Rng rng(202);
  const int n = 40, p = 15;
  Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = i < n / 2 ? 0.0 : 1.0;
  X.col(8).array() += 3.0 * y.array();  // dominant feature

  const auto model = fit_lda_top_g(X, y, 1);
  REQUIRE(model.selected.size() == 1);
  const Eigen::VectorXd corr = column_correlations(X, y);
  int argmax = 0;
  for (int j = 1; j < p; ++j)
    if (std::abs(corr[j]) > std::abs(corr[argmax])) argmax = j;
  CHECK(model.selected[0] == argmax);
  CHECK(argmax == 8);
}

TEST_CASE("fit_lda_top_g separates two clear clusters") {
  Rng rng(203);
  const int n = 30;
  Eigen::MatrixXd X = random_matrix(n, 2, rng) * 0.1;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1.0 : 0.0;
    X(i, 0) += y[i] * 5.0;
  }
  const auto model = fit_lda_top_g(X, y, 2);
  const Eigen::VectorXd pred = predict(model, X);
  CHECK((pred - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lda prediction is shift-invariant in the features") {
  Rng rng(204);
  const int n = 24;
  Eigen::MatrixXd X = random_matrix(n, 6, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = i < n / 2 ? 0.0 : 1.0;
  X.col(2).array() += y.array();

  const auto a = fit_lda_top_g(X, y, 3);
  const Eigen::MatrixXd Xshift = X.rowwise() + Eigen::RowVectorXd::Constant(6, 11.0).eval();
  const auto b = fit_lda_top_g(Xshift, y, 3);
  CHECK((predict(a, X) - predict(b, Xshift)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit_corr_centroid cutoff rules") {
  Rng rng(301);
  const int n = 26, p = 12;
  Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = i < 10 ? 0.0 : 1.0;  // 10 poor, 16 good
  for (int j = 0; j < 4; ++j) X.col(j).array() += 1.5 * y.array();

  const auto strict = fit_corr_centroid(X, y, 6, 0);
  const Eigen::VectorXd pred = predict(strict, X);
  int poor_called_good = 0;
  for (int i = 0; i < 10; ++i) poor_called_good += pred[i] > 0.5 ? 1 : 0;
  CHECK(poor_called_good == 0);

  const auto loose = fit_corr_centroid(X, y, 6, 3);
  const Eigen::VectorXd pred3 = predict(loose, X);
  int miss = 0;
  for (int i = 0; i < 10; ++i) miss += pred3[i] > 0.5 ? 1 : 0;
  CHECK(miss <= 3);
  CHECK(loose.cutoff <= strict.cutoff);

  const auto permissive = fit_corr_centroid(X, y, 6, 10);
  CHECK(permissive.cutoff_degenerate);
  CHECK(permissive.cutoff == -1.0);
  CHECK(predict(permissive, X).minCoeff() == 1.0);
}

TEST_CASE("corr_centroid predicts good on the centroid itself") {
  Rng rng(302);
  const int n = 20, p = 8;
  Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = i % 2 ? 1.0 : 0.0;
  X.col(0).array() += 2.0 * y.array();
  const auto model = fit_corr_centroid(X, y, 4, 1);
  if (!model.cutoff_degenerate) {
    // construct a raw row whose standardized form equals the centroid
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, p);
    for (std::size_t k = 0; k < model.selected.size(); ++k)
      row(0, model.selected[k]) =
          model.centroid[k] * model.feature_scale[k] + model.feature_mean[k];
    CHECK(predict(model, row)[0] == 1.0);
  }
}

TEST_CASE("fit_plr_cv picks a grid member and fits the target sparsity") {
  Rng rng(401);
  const int n = 40, p = 10;
  Eigen::MatrixXd X = random_matrix(n, p, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i < n / 2 ? 0.0 : 1.0;
    X(i, 0) += 2.5 * y[i];
    X(i, 1) += 2.0 * y[i];
  }
  const std::vector<int> grid = {1, 2, 4};
  const auto model = fit_plr_cv(X, y, grid, 3, 99);
  CHECK(std::find(grid.begin(), grid.end(), model.plr_winner) != grid.end());
  CHECK((model.coef.array() != 0.0).count() == model.plr_winner);
  // separable direction: training error should be low
  const Eigen::VectorXd pred = predict(model, X);
  int errors = 0;
  for (int i = 0; i < n; ++i) errors += pred[i] != y[i] ? 1 : 0;
  CHECK(errors <= 6);
}

TEST_CASE("top_correlated matches a brute-force scan") {
  Rng rng(501);
  const Eigen::MatrixXd X = random_matrix(35, 9, rng);
  Eigen::VectorXd y(35);
  for (int i = 0; i < 35; ++i) y[i] = rng.normal();
  const auto top = top_correlated(X, y, 4);
  const Eigen::VectorXd corr = column_correlations(X, y);
  std::vector<int> order(9);
  for (int j = 0; j < 9; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(corr[a]) > std::abs(corr[b]);
  });
  std::vector<int> expected(order.begin(), order.begin() + 4);
  std::sort(expected.begin(), expected.end());
  CHECK(top == expected);
}

TEST_CASE("spec JSON round trip") {
  InternalModelSpec spec;
  spec.kind = ModelKind::lasso_l;
  spec.l = 7;
  spec.center = true;
  const auto back = InternalModelSpec::from_json(spec.to_json());
  CHECK(back.kind == ModelKind::lasso_l);
  CHECK(back.l == 7);
  CHECK(back.center);

  InternalModelSpec plr;
  plr.kind = ModelKind::plr_cv;
  plr.sparsity_grid = {5, 10, 15};
  plr.inner_folds = 4;
  const auto back2 = InternalModelSpec::from_json(plr.to_json());
  CHECK(back2.sparsity_grid == plr.sparsity_grid);
  CHECK(back2.inner_folds == 4);
}

TEST_CASE("spec validation rejects out-of-range parameters") {
  InternalModelSpec spec;
  spec.kind = ModelKind::lasso_l;
  spec.l = 0;
  CHECK_THROWS_AS(spec.validate(10), std::invalid_argument);
  spec.l = 11;
  CHECK_THROWS_AS(spec.validate(10), std::invalid_argument);
  spec.kind = ModelKind::lda_top_g;
  spec.g = 0;
  CHECK_THROWS_AS(spec.validate(10), std::invalid_argument);
  spec.kind = ModelKind::lda_top_g;
  spec.g = 2;
  spec.center = true;
  CHECK_THROWS_AS(spec.validate(10), std::invalid_argument);
}
