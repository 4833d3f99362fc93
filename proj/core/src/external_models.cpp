#include "prevalid/external_models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prevalid/dist.hpp"

namespace prevalid {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

Eigen::MatrixXd build_design(const Eigen::VectorXd& ytilde, const Eigen::MatrixXd& Z,
                             bool include_intercept, std::vector<std::string>& names) {
  const Eigen::Index n = ytilde.size();
  if (Z.cols() > 0 && Z.rows() != n) fail("external fit: Z row count mismatch");
  const Eigen::Index m = 1 + Z.cols() + (include_intercept ? 1 : 0);
  Eigen::MatrixXd W(n, m);
  W.col(0) = ytilde;
  names.clear();
  names.push_back("pv");
  for (Eigen::Index k = 0; k < Z.cols(); ++k) {
    W.col(1 + k) = Z.col(k);
    names.push_back("z_" + std::to_string(k + 1));
  }
  if (include_intercept) {
    W.col(m - 1).setOnes();
    names.push_back("(intercept)");
  }
  return W;
}

void check_rank(const Eigen::MatrixXd& W) {
  if (W.rows() <= W.cols())
    fail("external fit: n = " + std::to_string(W.rows()) +
         " must exceed column count " + std::to_string(W.cols()));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  qr.setThreshold(1e-10);
  if (qr.rank() < W.cols())
    throw std::runtime_error("external fit: design is rank deficient (rank " +
                             std::to_string(qr.rank()) + " of " +
                             std::to_string(W.cols()) + " columns)");
}

double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  if (num > 0.0) return std::numeric_limits<double>::infinity();
  if (num < 0.0) return -std::numeric_limits<double>::infinity();
  return 0.0;
}

double gaussian_deviance(double rss, Eigen::Index n) {
  const double sig2_mle = std::max(rss / static_cast<double>(n), 1e-300);
  return static_cast<double>(n) * (std::log(2.0 * std::numbers::pi * sig2_mle) + 1.0);
}

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& W, Eigen::Index col) {
  Eigen::MatrixXd R(W.rows(), W.cols() - 1);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    if (j != col) R.col(c++) = W.col(j);
  return R;
}

struct IrlsResult {
  Eigen::VectorXd beta;      // on the given (already scaled) design
  Eigen::MatrixXd cov;
  double deviance = 0.0;
  bool converged = false;
  bool separation = false;
};

double logistic_deviance(const Eigen::MatrixXd& W, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& y) {
  const Eigen::VectorXd eta = W * beta;
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double pi = 1.0 / (1.0 + std::exp(-eta[i]));
    const double eps = 1e-15;
    dev -= 2.0 * (y[i] * std::log(std::max(pi, eps)) +
                  (1.0 - y[i]) * std::log(std::max(1.0 - pi, eps)));
  }
  return dev;
}

// IRLS with step halving; separation declared when any coefficient on the
// standardized design exceeds 15 in magnitude
IrlsResult irls(const Eigen::MatrixXd& W, const Eigen::VectorXd& y) {
  const Eigen::Index n = W.rows(), m = W.cols();
  IrlsResult res;
  res.beta = Eigen::VectorXd::Zero(m);
  res.deviance = logistic_deviance(W, res.beta, y);

  Eigen::MatrixXd fisher(m, m);
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = W * res.beta;
    Eigen::ArrayXd prob(n), weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      weight[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
    }
    const Eigen::VectorXd score = W.transpose() * (y.array() - prob).matrix();
    fisher = W.transpose() * weight.matrix().asDiagonal() * W;

    if (score.lpNorm<Eigen::Infinity>() < 1e-9) {
      res.converged = true;
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(fisher);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("logistic fit: Fisher information not invertible");
    Eigen::VectorXd delta = ldlt.solve(score);

    double step = 1.0;
    Eigen::VectorXd candidate;
    double cand_dev = 0.0;
    for (int halvings = 0; halvings < 30; ++halvings) {
      candidate = res.beta + step * delta;
      cand_dev = logistic_deviance(W, candidate, y);
      if (std::isfinite(cand_dev) && cand_dev <= res.deviance + 1e-10) break;
      step *= 0.5;
    }
    res.beta = candidate;
    res.deviance = cand_dev;
  }

  res.separation = res.beta.lpNorm<Eigen::Infinity>() > 15.0;
  {
    const Eigen::VectorXd eta = W * res.beta;
    Eigen::ArrayXd weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = 1.0 / (1.0 + std::exp(-eta[i]));
      weight[i] = std::max(pi * (1.0 - pi), 1e-10);
    }
    fisher = W.transpose() * weight.matrix().asDiagonal() * W;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(fisher);
    res.cov = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
  }
  return res;
}

}  // namespace

std::string to_string(ExternalKind kind) {
  return kind == ExternalKind::linear ? "linear" : "logistic";
}

ExternalKind external_kind_from_string(const std::string& name) {
  if (name == "linear") return ExternalKind::linear;
  if (name == "logistic") return ExternalKind::logistic;
  fail("unknown external model kind '" + name + "'");
}

ExternalFit fit_linear_external(const Eigen::VectorXd& ytilde, const Eigen::MatrixXd& Z,
                                const Eigen::VectorXd& y, bool include_intercept) {
  if (y.size() != ytilde.size()) fail("external fit: y/ytilde length mismatch");

  ExternalFit fit;
  fit.kind = ExternalKind::linear;
  fit.include_intercept = include_intercept;
  const Eigen::MatrixXd W = build_design(ytilde, Z, include_intercept, fit.column_names);
  check_rank(W);

  const Eigen::Index n = W.rows(), m = W.cols();
  const Eigen::MatrixXd WtW = W.transpose() * W;
  const Eigen::LLT<Eigen::MatrixXd> llt(WtW);
  fit.coef = llt.solve(W.transpose() * y);

  const Eigen::VectorXd resid = y - W * fit.coef;
  const double rss = resid.squaredNorm();
  fit.df_residual = static_cast<int>(n - m);
  fit.sigma2 = rss / static_cast<double>(fit.df_residual);

  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  fit.se.resize(m);
  fit.stat.resize(m);
  fit.p_two_sided.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    fit.se[j] = std::sqrt(std::max(fit.sigma2 * inv(j, j), 0.0));
    fit.stat[j] = safe_ratio(fit.coef[j], fit.se[j]);
    fit.p_two_sided[j] = std::isfinite(fit.stat[j])
                             ? 2.0 * student_t_upper_tail(std::abs(fit.stat[j]), fit.df_residual)
                             : 0.0;
  }
  fit.p_pv_one_sided = std::isfinite(fit.stat[0])
                           ? student_t_upper_tail(fit.stat[0], fit.df_residual)
                           : (fit.stat[0] > 0.0 ? 0.0 : 1.0);

  fit.deviance = gaussian_deviance(rss, n);
  fit.loglik = -0.5 * fit.deviance;

  fit.delta_deviance.resize(m);
  fit.p_deviance.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::MatrixXd Wr = drop_column(W, j);
    double rss_r;
    if (Wr.cols() == 0) {
      rss_r = y.squaredNorm();
    } else {
      const Eigen::VectorXd beta_r = (Wr.transpose() * Wr).llt().solve(Wr.transpose() * y);
      rss_r = (y - Wr * beta_r).squaredNorm();
    }
    fit.delta_deviance[j] = std::max(gaussian_deviance(rss_r, n) - fit.deviance, 0.0);
    fit.p_deviance[j] = chi_squared_upper_tail(fit.delta_deviance[j], 1.0);
  }
  return fit;
}

ExternalFit fit_logistic_external(const Eigen::VectorXd& ytilde, const Eigen::MatrixXd& Z,
                                  const Eigen::VectorXd& y, bool include_intercept) {
  if (y.size() != ytilde.size()) fail("external fit: y/ytilde length mismatch");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0) fail("logistic external fit needs a 0/1 response");

  ExternalFit fit;
  fit.kind = ExternalKind::logistic;
  fit.include_intercept = include_intercept;
  const Eigen::MatrixXd W = build_design(ytilde, Z, include_intercept, fit.column_names);
  check_rank(W);

  const Eigen::Index n = W.rows(), m = W.cols();
  const Eigen::Index m_pred = include_intercept ? m - 1 : m;

  // standardize predictor columns for the separation threshold and IRLS
  // conditioning, then map the fit back to the original scale
  Eigen::MatrixXd Ws = W;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m), scale = Eigen::VectorXd::Ones(m);
  for (Eigen::Index j = 0; j < m_pred; ++j) {
    mean[j] = W.col(j).mean();
    const double sd = std::sqrt((W.col(j).array() - mean[j]).square().sum() /
                                static_cast<double>(n));
    scale[j] = sd > 0.0 ? sd : 1.0;
    Ws.col(j) = (W.col(j).array() - mean[j]) / scale[j];
  }
  if (!include_intercept) {
    mean.setZero();  // no intercept to absorb centering: scale only
    for (Eigen::Index j = 0; j < m; ++j) Ws.col(j) = W.col(j) / scale[j];
  }

  IrlsResult res = irls(Ws, y);
  fit.separation = res.separation;
  fit.converged = res.converged;
  fit.deviance = res.deviance;
  fit.loglik = -0.5 * res.deviance;
  fit.df_residual = static_cast<int>(n - m);

  // back-transform: beta_orig = T beta_std
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) T(j, j) = 1.0 / scale[j];
  if (include_intercept)
    for (Eigen::Index j = 0; j < m_pred; ++j) T(m - 1, j) = -mean[j] / scale[j];
  fit.coef = T * res.beta;
  const Eigen::MatrixXd cov = T * res.cov * T.transpose();

  fit.se.resize(m);
  fit.stat.resize(m);
  fit.p_two_sided.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    fit.se[j] = std::sqrt(std::max(cov(j, j), 0.0));
    fit.stat[j] = safe_ratio(fit.coef[j], fit.se[j]);
    fit.p_two_sided[j] = std::isfinite(fit.stat[j])
                             ? 2.0 * normal_upper_tail(std::abs(fit.stat[j]))
                             : 0.0;
  }
  fit.p_pv_one_sided = std::isfinite(fit.stat[0]) ? normal_upper_tail(fit.stat[0])
                                                  : (fit.stat[0] > 0.0 ? 0.0 : 1.0);

  fit.delta_deviance.resize(m);
  fit.p_deviance.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    // Rebuild the reduced design from the original columns: centering is only
    // span-preserving while the intercept column is still present.
    Eigen::MatrixXd Wr = drop_column(W, j);
    const bool has_intercept = include_intercept && j != m - 1;
    for (Eigen::Index k = 0; k < Wr.cols(); ++k) {
      if (has_intercept && k == Wr.cols() - 1) continue;  // intercept column
      const double mu = has_intercept ? Wr.col(k).mean() : 0.0;
      const double sd = std::sqrt((Wr.col(k).array() - mu).square().sum() /
                                  static_cast<double>(n));
      if (sd > 0.0) Wr.col(k) = (Wr.col(k).array() - mu) / sd;
    }
    double dev_r;
    if (Wr.cols() == 0) {
      dev_r = logistic_deviance(Eigen::MatrixXd::Zero(n, 1), Eigen::VectorXd::Zero(1), y);
    } else {
      dev_r = irls(Wr, y).deviance;
    }
    fit.delta_deviance[j] = std::max(dev_r - fit.deviance, 0.0);
    fit.p_deviance[j] = chi_squared_upper_tail(fit.delta_deviance[j], 1.0);
  }
  return fit;
}

ExternalFit fit_external(ExternalKind kind, const Eigen::VectorXd& ytilde,
                         const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                         bool include_intercept) {
  return kind == ExternalKind::linear
             ? fit_linear_external(ytilde, Z, y, include_intercept)
             : fit_logistic_external(ytilde, Z, y, include_intercept);
}

std::pair<double, double> deviance_drop(const ExternalFit& fit_full,
                                        const ExternalFit& fit_reduced) {
  if (fit_full.kind != fit_reduced.kind) fail("deviance_drop: model kinds differ");
  const auto& full = fit_full.column_names;
  const auto& red = fit_reduced.column_names;
  if (full.size() != red.size() && full.size() != red.size() + 1)
    fail("deviance_drop: models must differ by at most one column");
  for (const auto& name : red)
    if (std::find(full.begin(), full.end(), name) == full.end())
      fail("deviance_drop: models are not nested (column '" + name + "')");

  const double drop = std::max(fit_reduced.deviance - fit_full.deviance, 0.0);
  return {drop, chi_squared_upper_tail(drop, 1.0)};
}

nlohmann::json ExternalFit::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["include_intercept"] = include_intercept;
  j["separation"] = separation;
  j["converged"] = converged;
  j["df_residual"] = df_residual;
  j["deviance"] = deviance;
  if (kind == ExternalKind::linear) j["sigma2"] = sigma2;
  j["p_pv_one_sided"] = p_pv_one_sided;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    rows.push_back({{"predictor", column_names[i]},
                    {"coefficient", coef[static_cast<Eigen::Index>(i)]},
                    {"se", se[static_cast<Eigen::Index>(i)]},
                    {"statistic", stat[static_cast<Eigen::Index>(i)]},
                    {"p_two_sided", p_two_sided[static_cast<Eigen::Index>(i)]},
                    {"delta_deviance", delta_deviance[static_cast<Eigen::Index>(i)]},
                    {"p_deviance", p_deviance[static_cast<Eigen::Index>(i)]}});
  }
  j["coefficients"] = rows;
  return j;
}

std::string ExternalFit::to_table() const {
  std::ostringstream out;
  char line[256];
  const char* stat_name = kind == ExternalKind::linear ? "t" : "z-score";
  std::snprintf(line, sizeof(line), "%-12s %12s %10s %10s %10s %12s %12s\n",
                "Predictor", "Coefficient", "SD", stat_name, "p-value",
                "dDeviance", "p-value(dev)");
  out << line;
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    const Eigen::Index j = static_cast<Eigen::Index>(i);
    const double p = (i == 0) ? p_pv_one_sided : p_two_sided[j];
    std::snprintf(line, sizeof(line), "%-12s %12.3f %10.3f %10.2f %10.4g %12.2f %12.4g\n",
                  column_names[i].c_str(), coef[j], se[j], stat[j], p,
                  delta_deviance[j], p_deviance[j]);
    out << line;
  }
  if (separation) out << "warning: perfect separation detected; SEs unreliable\n";
  return out.str();
}

}  // namespace prevalid
