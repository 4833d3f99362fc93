#include "prevalid/internal_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prevalid/data_model.hpp"
#include "prevalid/rng.hpp"

namespace prevalid {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require_both_classes(const Eigen::VectorXd& y) {
  const auto n1 = (y.array() == 1.0).count();
  if (n1 == 0 || n1 == y.size())
    fail("classifier fit needs both classes in the training fold");
}

// mean/scale standardization of the given columns; zero-variance columns get
// scale 1 so they pass through unchanged
void standardize_columns(const Eigen::MatrixXd& X, const std::vector<int>& cols,
                         Eigen::VectorXd& mean, Eigen::VectorXd& scale,
                         Eigen::MatrixXd& out) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(cols.size());
  mean.resize(m);
  scale.resize(m);
  out.resize(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto col = X.col(cols[j]);
    mean[j] = col.mean();
    const double var = (col.array() - mean[j]).square().sum() / static_cast<double>(n);
    scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    out.col(j) = (col.array() - mean[j]) / scale[j];
  }
}

// Pearson correlation across entries of two equal-length vectors
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom <= 0.0) return 0.0;
  return (da * db).sum() / denom;
}

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

struct PlrFit {
  Eigen::VectorXd beta;  // standardized space
  double intercept = 0.0;
  int active = 0;
  bool ok = false;
};

// L1-penalized logistic regression on standardized columns: IRLS outer loop
// with coordinate descent on the penalized weighted least squares problem.
// Intercept unpenalized. Returns ok=false on divergence.
PlrFit l1_logistic(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y, double lambda,
                   const PlrFit* warm = nullptr) {
  const Eigen::Index n = Xs.rows(), p = Xs.cols();
  PlrFit fit;
  fit.beta = warm ? warm->beta : Eigen::VectorXd::Zero(p);
  fit.intercept = warm ? warm->intercept : 0.0;

  const double inv_n = 1.0 / static_cast<double>(n);
  double prev_dev = std::numeric_limits<double>::infinity();
  Eigen::VectorXd eta = (Xs * fit.beta).array() + fit.intercept;

  for (int outer = 0; outer < 100; ++outer) {
    Eigen::ArrayXd prob = eta.array().unaryExpr([](double e) { return logistic(e); });
    Eigen::ArrayXd w = (prob * (1.0 - prob)).max(1e-5);
    Eigen::ArrayXd z = eta.array() + (y.array() - prob) / w;

    // coordinate descent on: min (1/2n) sum w (z - b0 - Xs beta)^2 + lambda |beta|_1
    Eigen::ArrayXd r = z - eta.array();  // residual of current coefficients
    Eigen::VectorXd denom(p);
    for (Eigen::Index j = 0; j < p; ++j)
      denom[j] = (w * Xs.col(j).array().square()).sum() * inv_n;

    for (int sweep = 0; sweep < 200; ++sweep) {
      double max_delta = 0.0;
      // intercept
      {
        const double num = (w * (r + fit.intercept)).sum() * inv_n;
        const double den = w.sum() * inv_n;
        const double b_new = num / den;
        const double d = b_new - fit.intercept;
        if (d != 0.0) {
          r -= d;
          fit.intercept = b_new;
          max_delta = std::max(max_delta, std::abs(d));
        }
      }
      for (Eigen::Index j = 0; j < p; ++j) {
        if (denom[j] <= 0.0) continue;
        const double bj = fit.beta[j];
        const double rho = (w * Xs.col(j).array() * (r + Xs.col(j).array() * bj)).sum() * inv_n;
        double b_new = 0.0;
        if (rho > lambda)
          b_new = (rho - lambda) / denom[j];
        else if (rho < -lambda)
          b_new = (rho + lambda) / denom[j];
        const double d = b_new - bj;
        if (d != 0.0) {
          r -= d * Xs.col(j).array();
          fit.beta[j] = b_new;
          max_delta = std::max(max_delta, std::abs(d));
        }
      }
      if (max_delta < 1e-9) break;
    }

    eta = (Xs * fit.beta).array() + fit.intercept;
    if (!eta.allFinite() || eta.array().abs().maxCoeff() > 1e4) return fit;  // diverged

    double dev = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = logistic(eta[i]);
      const double eps = 1e-12;
      dev -= 2.0 * (y[i] * std::log(std::max(pi, eps)) +
                    (1.0 - y[i]) * std::log(std::max(1.0 - pi, eps)));
    }
    if (!std::isfinite(dev)) return fit;
    if (std::abs(prev_dev - dev) < 1e-8 * (std::abs(dev) + 1.0)) {
      fit.ok = true;
      break;
    }
    prev_dev = dev;
    if (outer == 99) fit.ok = true;  // treat slow convergence as usable
  }
  fit.active = static_cast<int>((fit.beta.array().abs() > 1e-10).count());
  return fit;
}

// bisection on the penalty so the active set has target_active members;
// after 50 steps the nearest count wins, smaller count on ties
PlrFit l1_logistic_at_sparsity(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& y,
                               int target_active, bool& ok) {
  const Eigen::Index n = Xs.rows();
  const double ybar = y.mean();
  double lambda_hi = 0.0;
  for (Eigen::Index j = 0; j < Xs.cols(); ++j)
    lambda_hi = std::max(lambda_hi,
                         std::abs((Xs.col(j).array() * (y.array() - ybar)).sum()) /
                             static_cast<double>(n));
  lambda_hi *= 1.01;
  double lambda_lo = 1e-8 * lambda_hi;

  PlrFit best;
  int best_gap = std::numeric_limits<int>::max();
  for (int step = 0; step < 50; ++step) {
    const double lambda = 0.5 * (lambda_lo + lambda_hi);
    PlrFit fit = l1_logistic(Xs, y, lambda);
    if (!fit.ok) {
      ok = false;
      return fit;
    }
    const int gap = std::abs(fit.active - target_active);
    const bool better =
        gap < best_gap || (gap == best_gap && fit.active < best.active);
    if (better) {
      best = fit;
      best_gap = gap;
    }
    if (fit.active == target_active) break;
    if (fit.active > target_active)
      lambda_lo = lambda;
    else
      lambda_hi = lambda;
  }
  ok = best_gap != std::numeric_limits<int>::max();
  return best;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ols: return "ols";
    case ModelKind::lasso_l: return "lasso_l";
    case ModelKind::lda_top_g: return "lda_top_g";
    case ModelKind::corr_centroid: return "corr_centroid";
    case ModelKind::plr_cv: return "plr_cv";
  }
  fail("bad model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "ols") return ModelKind::ols;
  if (name == "lasso_l") return ModelKind::lasso_l;
  if (name == "lda_top_g") return ModelKind::lda_top_g;
  if (name == "corr_centroid") return ModelKind::corr_centroid;
  if (name == "plr_cv") return ModelKind::plr_cv;
  fail("unknown model kind '" + name + "'");
}

void InternalModelSpec::validate(Eigen::Index p) const {
  if (center && kind != ModelKind::ols && kind != ModelKind::lasso_l)
    fail("center applies to regression kinds only");
  switch (kind) {
    case ModelKind::ols:
      break;
    case ModelKind::lasso_l:
      if (l < 1 || l > p) fail("lasso_l: l must be in [1, p]");
      break;
    case ModelKind::lda_top_g:
      if (g < 1 || g > p) fail("lda_top_g: g must be in [1, p]");
      break;
    case ModelKind::corr_centroid:
      if (m_genes < 1 || m_genes > p) fail("corr_centroid: m_genes must be in [1, p]");
      if (allowed_misclass < 0) fail("corr_centroid: allowed_misclass must be >= 0");
      break;
    case ModelKind::plr_cv:
      if (sparsity_grid.empty()) fail("plr_cv: empty sparsity grid");
      for (int s : sparsity_grid)
        if (s < 1 || s > p) fail("plr_cv: grid entry out of [1, p]");
      if (inner_folds < 2) fail("plr_cv: inner_folds must be >= 2");
      break;
  }
}

nlohmann::json InternalModelSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  switch (kind) {
    case ModelKind::ols:
      j["center"] = center;
      break;
    case ModelKind::lasso_l:
      j["l"] = l;
      j["center"] = center;
      break;
    case ModelKind::lda_top_g:
      j["g"] = g;
      j["discriminant_score"] = discriminant_score;
      break;
    case ModelKind::corr_centroid:
      j["m_genes"] = m_genes;
      j["allowed_misclass"] = allowed_misclass;
      break;
    case ModelKind::plr_cv:
      j["sparsity_grid"] = sparsity_grid;
      j["inner_folds"] = inner_folds;
      break;
  }
  return j;
}

InternalModelSpec InternalModelSpec::from_json(const nlohmann::json& j) {
  InternalModelSpec spec;
  spec.kind = model_kind_from_string(j.at("kind").get<std::string>());
  switch (spec.kind) {
    case ModelKind::ols:
      spec.center = j.value("center", false);
      break;
    case ModelKind::lasso_l:
      spec.l = j.at("l").get<int>();
      spec.center = j.value("center", false);
      break;
    case ModelKind::lda_top_g:
      spec.g = j.at("g").get<int>();
      spec.discriminant_score = j.value("discriminant_score", false);
      break;
    case ModelKind::corr_centroid:
      spec.m_genes = j.at("m_genes").get<int>();
      spec.allowed_misclass = j.at("allowed_misclass").get<int>();
      break;
    case ModelKind::plr_cv:
      spec.sparsity_grid = j.at("sparsity_grid").get<std::vector<int>>();
      spec.inner_folds = j.at("inner_folds").get<int>();
      break;
  }
  return spec;
}

Eigen::VectorXd column_correlations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index p = X.cols();
  Eigen::VectorXd corr(p);
  const double my = y.mean();
  const Eigen::ArrayXd dy = y.array() - my;
  const double sy = std::sqrt(dy.square().sum());
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::ArrayXd dx = X.col(j).array() - X.col(j).mean();
    const double sx = std::sqrt(dx.square().sum());
    corr[j] = (sx > 0.0 && sy > 0.0) ? (dx * dy).sum() / (sx * sy) : 0.0;
  }
  return corr;
}

std::vector<int> top_correlated(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int g) {
  const Eigen::VectorXd corr = column_correlations(X, y);
  std::vector<int> order(static_cast<std::size_t>(X.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(corr[a]) > std::abs(corr[b]);
  });
  order.resize(g);
  std::sort(order.begin(), order.end());
  return order;
}

FittedInternalModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (p >= n) fail("fit_ols: requires p < n");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p)
    throw std::runtime_error("fit_ols: design is rank deficient (rank " +
                             std::to_string(qr.rank()) + " of " + std::to_string(p) +
                             " columns)");
  FittedInternalModel model;
  model.kind = ModelKind::ols;
  model.p = p;
  model.coef = qr.solve(y);
  model.selected.resize(p);
  std::iota(model.selected.begin(), model.selected.end(), 0);
  return model;
}

FittedInternalModel fit_lasso_l(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int l) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (l < 1 || l > std::min<Eigen::Index>(p, n - 1))
    fail("fit_lasso_l: l must be in [1, min(p, n-1)]");

  FittedInternalModel model;
  model.kind = ModelKind::lasso_l;
  model.p = p;
  model.coef = Eigen::VectorXd::Zero(p);

  // scale-normalized columns so entry order compares correlations fairly
  Eigen::VectorXd norms(p);
  Eigen::MatrixXd Xs(n, p);
  std::vector<bool> usable(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    norms[j] = X.col(j).norm();
    usable[j] = norms[j] > 0.0;
    Xs.col(j) = usable[j] ? (X.col(j) / norms[j]).eval() : X.col(j);
  }

  Eigen::VectorXd c = Xs.transpose() * y;
  std::vector<int> active;
  std::vector<double> signs;
  std::vector<bool> in_active(p, false);
  Eigen::VectorXd beta_s = Eigen::VectorXd::Zero(p);

  const int usable_count = static_cast<int>(std::count(usable.begin(), usable.end(), true));
  if (y.norm() == 0.0) return model;  // degenerate all-zero response
  if (usable_count < l) fail("fit_lasso_l: fewer than l usable columns");

  while (static_cast<int>(active.size()) < l) {
    // next entrant: largest |c_j| among inactive; lowest index wins ties
    double C = -1.0;
    int j_star = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (in_active[j] || !usable[j]) continue;
      if (std::abs(c[j]) > C) {
        C = std::abs(c[j]);
        j_star = static_cast<int>(j);
      }
    }
    if (j_star < 0 || C < 1e-12)
      throw std::runtime_error("fit_lasso_l: path stalled before reaching l entries");
    active.push_back(j_star);
    signs.push_back(c[j_star] >= 0.0 ? 1.0 : -1.0);
    in_active[j_star] = true;

    const int a = static_cast<int>(active.size());
    Eigen::MatrixXd Xa(n, a);
    for (int k = 0; k < a; ++k) Xa.col(k) = signs[k] * Xs.col(active[k]);
    const Eigen::MatrixXd G = Xa.transpose() * Xa;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("fit_lasso_l: active set became singular at size " +
                               std::to_string(a));
    const Eigen::VectorXd w1 = llt.solve(Eigen::VectorXd::Ones(a));
    const double norm_factor = 1.0 / std::sqrt(w1.sum());
    const Eigen::VectorXd w = norm_factor * w1;
    const Eigen::VectorXd u = Xa * w;
    const Eigen::VectorXd adot = Xs.transpose() * u;

    // step length to the next entry event (or to full least squares when
    // every usable variable is active)
    double gamma = C / norm_factor;
    if (a < usable_count) {
      double gmin = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < p; ++j) {
        if (in_active[j] || !usable[j]) continue;
        const double cands[2] = {(C - c[j]) / (norm_factor - adot[j]),
                                 (C + c[j]) / (norm_factor + adot[j])};
        for (double cand : cands)
          if (cand > 1e-14 && cand < gmin) gmin = cand;
      }
      if (std::isfinite(gmin)) gamma = std::min(gamma, gmin);
    }

    for (int k = 0; k < a; ++k) beta_s[active[k]] += gamma * w[k] * signs[k];
    c -= gamma * adot;
  }

  for (int j : active) model.coef[j] = beta_s[j] / norms[j];
  model.selected = active;
  std::sort(model.selected.begin(), model.selected.end());
  return model;
}

FittedInternalModel fit_lda_top_g(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  int g, bool discriminant_score) {
  require_both_classes(y);
  if (g < 1 || g > X.cols()) fail("fit_lda_top_g: g out of range");

  FittedInternalModel model;
  model.kind = ModelKind::lda_top_g;
  model.p = X.cols();
  model.discriminant_score = discriminant_score;
  model.selected = top_correlated(X, y, g);

  Eigen::MatrixXd Xs;
  standardize_columns(X, model.selected, model.feature_mean, model.feature_scale, Xs);

  const Eigen::Index n = X.rows();
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(g), mu1 = Eigen::VectorXd::Zero(g);
  int n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] == 1.0) {
      mu1 += Xs.row(i).transpose();
      ++n1;
    } else {
      mu0 += Xs.row(i).transpose();
      ++n0;
    }
  }
  mu0 /= n0;
  mu1 /= n1;

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(g, g);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd d = Xs.row(i).transpose() - (y[i] == 1.0 ? mu1 : mu0);
    S += d * d.transpose();
  }
  S /= static_cast<double>(n - 2);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin <= 0.0 || lmax / lmin > 1e10) {
    const double ridge = 1e-6 * S.trace() / static_cast<double>(g);
    S += ridge * Eigen::MatrixXd::Identity(g, g);
    model.ridge_applied = true;
  }

  model.lda_weights = S.llt().solve(mu1 - mu0);
  model.lda_offset = -0.5 * (mu1 + mu0).dot(model.lda_weights) +
                     std::log(static_cast<double>(n1) / static_cast<double>(n0));
  return model;
}

FittedInternalModel fit_corr_centroid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      int m_genes, int allowed_misclass) {
  require_both_classes(y);
  if (m_genes < 1 || m_genes > X.cols()) fail("fit_corr_centroid: m_genes out of range");
  if (allowed_misclass < 0) fail("fit_corr_centroid: allowed_misclass must be >= 0");

  FittedInternalModel model;
  model.kind = ModelKind::corr_centroid;
  model.p = X.cols();
  model.selected = top_correlated(X, y, m_genes);

  Eigen::MatrixXd Xs;
  standardize_columns(X, model.selected, model.feature_mean, model.feature_scale, Xs);

  const Eigen::Index n = X.rows();
  model.centroid = Eigen::VectorXd::Zero(m_genes);
  int n_good = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] == 1.0) {
      model.centroid += Xs.row(i).transpose();
      ++n_good;
    }
  }
  model.centroid /= n_good;

  // correlation of every poor-prognosis training case with the good-class
  // centroid; the cutoff tolerates at most allowed_misclass of them above it
  std::vector<double> poor_corr;
  for (Eigen::Index i = 0; i < n; ++i)
    if (y[i] == 0.0) poor_corr.push_back(pearson(Xs.row(i).transpose(), model.centroid));

  if (allowed_misclass >= static_cast<int>(poor_corr.size())) {
    model.cutoff = -1.0;
    model.cutoff_degenerate = true;
  } else {
    std::sort(poor_corr.begin(), poor_corr.end(), std::greater<double>());
    model.cutoff = poor_corr[allowed_misclass];
  }
  return model;
}

FittedInternalModel fit_plr_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const std::vector<int>& sparsity_grid, int inner_folds,
                               std::uint64_t seed) {
  require_both_classes(y);
  if (sparsity_grid.empty()) fail("fit_plr_cv: empty sparsity grid");
  if (inner_folds < 2) fail("fit_plr_cv: inner_folds must be >= 2");
  const Eigen::Index n = X.rows(), p = X.cols();
  for (int s : sparsity_grid)
    if (s < 1 || s > p) fail("fit_plr_cv: grid entry out of [1, p]");

  std::vector<int> grid = sparsity_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<int> all_cols(p);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  Eigen::VectorXd mean, scale;
  Eigen::MatrixXd Xs;
  standardize_columns(X, all_cols, mean, scale, Xs);

  std::vector<int> labels(n);
  for (Eigen::Index i = 0; i < n; ++i) labels[i] = static_cast<int>(y[i]);
  const int k_inner = std::min<int>(inner_folds, static_cast<int>(n));
  const FoldAssignment folds = make_folds(static_cast<int>(n), k_inner, labels, seed);
  const auto groups = folds.groups();

  double best_error = std::numeric_limits<double>::infinity();
  int best_sparsity = -1;
  bool any_ok = false;

  for (int target : grid) {
    int errors = 0;
    bool grid_ok = true;
    for (const auto& test_rows : groups) {
      std::vector<bool> held(n, false);
      for (int i : test_rows) held[i] = true;
      const Eigen::Index n_train = n - static_cast<Eigen::Index>(test_rows.size());
      Eigen::MatrixXd Xtr(n_train, p);
      Eigen::VectorXd ytr(n_train);
      Eigen::Index r = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (held[i]) continue;
        Xtr.row(r) = Xs.row(i);
        ytr[r] = y[i];
        ++r;
      }
      if (ytr.sum() == 0.0 || ytr.sum() == static_cast<double>(n_train)) {
        grid_ok = false;  // single-class inner fold, cannot score
        break;
      }
      bool ok = false;
      const PlrFit fit = l1_logistic_at_sparsity(Xtr, ytr, target, ok);
      if (!ok) {
        grid_ok = false;
        break;
      }
      for (int i : test_rows) {
        const double eta = fit.intercept + Xs.row(i) * fit.beta;
        const double pred = eta > 0.0 ? 1.0 : 0.0;
        if (pred != y[i]) ++errors;
      }
    }
    if (!grid_ok) continue;
    any_ok = true;
    const double error = static_cast<double>(errors) / static_cast<double>(n);
    if (error < best_error) {  // ties keep the earlier (smaller) sparsity
      best_error = error;
      best_sparsity = target;
    }
  }

  if (!any_ok)
    throw std::runtime_error("fit_plr_cv: every sparsity grid point failed to fit");

  bool ok = false;
  const PlrFit final_fit = l1_logistic_at_sparsity(Xs, y, best_sparsity, ok);
  if (!ok) throw std::runtime_error("fit_plr_cv: final refit diverged");

  FittedInternalModel model;
  model.kind = ModelKind::plr_cv;
  model.p = p;
  model.plr_winner = best_sparsity;
  model.plr_inner_error = best_error;
  model.feature_mean = mean;
  model.feature_scale = scale;
  // back-transform to the original feature scale
  model.coef = Eigen::VectorXd::Zero(p);
  model.intercept = final_fit.intercept;
  for (Eigen::Index j = 0; j < p; ++j) {
    model.coef[j] = final_fit.beta[j] / scale[j];
    model.intercept -= final_fit.beta[j] * mean[j] / scale[j];
    if (std::abs(final_fit.beta[j]) > 1e-10) model.selected.push_back(static_cast<int>(j));
  }
  return model;
}

FittedInternalModel fit_internal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const InternalModelSpec& spec, std::uint64_t seed) {
  spec.validate(X.cols());
  if (spec.center) {
    const Eigen::RowVectorXd xm = X.colwise().mean();
    const double ym = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - xm;
    const Eigen::VectorXd yc = y.array() - ym;
    FittedInternalModel model = spec.kind == ModelKind::ols
                                    ? fit_ols(Xc, yc)
                                    : fit_lasso_l(Xc, yc, spec.l);
    model.intercept = ym - xm.dot(model.coef);
    return model;
  }
  switch (spec.kind) {
    case ModelKind::ols:
      return fit_ols(X, y);
    case ModelKind::lasso_l:
      return fit_lasso_l(X, y, spec.l);
    case ModelKind::lda_top_g:
      return fit_lda_top_g(X, y, spec.g, spec.discriminant_score);
    case ModelKind::corr_centroid:
      return fit_corr_centroid(X, y, spec.m_genes, spec.allowed_misclass);
    case ModelKind::plr_cv:
      return fit_plr_cv(X, y, spec.sparsity_grid, spec.inner_folds, seed);
  }
  fail("bad model kind");
}

Eigen::VectorXd predict(const FittedInternalModel& model, const Eigen::MatrixXd& X_new) {
  if (X_new.cols() != model.p)
    fail("predict: expected " + std::to_string(model.p) + " columns, got " +
         std::to_string(X_new.cols()));
  const Eigen::Index n = X_new.rows();

  switch (model.kind) {
    case ModelKind::ols:
    case ModelKind::lasso_l:
      return (X_new * model.coef).array() + model.intercept;
    case ModelKind::plr_cv: {
      Eigen::VectorXd eta = (X_new * model.coef).array() + model.intercept;
      return eta.unaryExpr([](double e) { return e > 0.0 ? 1.0 : 0.0; });
    }
    case ModelKind::lda_top_g: {
      Eigen::VectorXd out(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        double score = model.lda_offset;
        for (std::size_t k = 0; k < model.selected.size(); ++k) {
          const double v =
              (X_new(i, model.selected[k]) - model.feature_mean[k]) / model.feature_scale[k];
          score += model.lda_weights[k] * v;
        }
        out[i] = model.discriminant_score ? score : (score > 0.0 ? 1.0 : 0.0);
      }
      return out;
    }
    case ModelKind::corr_centroid: {
      Eigen::VectorXd out(n);
      const Eigen::Index m = static_cast<Eigen::Index>(model.selected.size());
      Eigen::VectorXd v(m);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < m; ++k)
          v[k] = (X_new(i, model.selected[k]) - model.feature_mean[k]) / model.feature_scale[k];
        out[i] = pearson(v, model.centroid) > model.cutoff ? 1.0 : 0.0;
      }
      return out;
    }
  }
  fail("bad model kind");
}

}  // namespace prevalid
