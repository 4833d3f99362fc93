#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace prevalid {

enum class ExternalKind { linear, logistic };

std::string to_string(ExternalKind kind);
ExternalKind external_kind_from_string(const std::string& name);

// Comparison regression of y on (ytilde, Z[, intercept]). Coefficient order:
// the pre-validated predictor first, then the Z columns, intercept last.
struct ExternalFit {
  ExternalKind kind = ExternalKind::linear;
  std::vector<std::string> column_names;

  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::VectorXd stat;          // t (linear) or z (logistic)
  Eigen::VectorXd p_two_sided;   // per coefficient
  Eigen::VectorXd delta_deviance;
  Eigen::VectorXd p_deviance;    // upper chi^2_1 tail of delta_deviance

  double p_pv_one_sided = 1.0;   // one-sided p for the PV coefficient

  double sigma2 = 0.0;           // linear only: RSS / (n - #columns)
  double deviance = 0.0;
  double loglik = 0.0;
  int df_residual = 0;
  bool include_intercept = false;
  bool separation = false;       // logistic: SEs unreliable when set
  bool converged = true;

  double pv_coef() const { return coef[0]; }
  double pv_stat() const { return stat[0]; }
  double pv_delta_deviance() const { return delta_deviance[0]; }

  nlohmann::json to_json() const;
  // aligned text table: predictor, coefficient, SD, statistic, p-value,
  // delta deviance, p-value(dev)
  std::string to_table() const;
};

ExternalFit fit_linear_external(const Eigen::VectorXd& ytilde, const Eigen::MatrixXd& Z,
                                const Eigen::VectorXd& y, bool include_intercept);

ExternalFit fit_logistic_external(const Eigen::VectorXd& ytilde, const Eigen::MatrixXd& Z,
                                  const Eigen::VectorXd& y, bool include_intercept);

ExternalFit fit_external(ExternalKind kind, const Eigen::VectorXd& ytilde,
                         const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                         bool include_intercept);

// Likelihood-ratio drop between two nested fits differing by one column.
// Returns (delta deviance, upper chi^2_1 tail p-value).
std::pair<double, double> deviance_drop(const ExternalFit& fit_full,
                                        const ExternalFit& fit_reduced);

}  // namespace prevalid
