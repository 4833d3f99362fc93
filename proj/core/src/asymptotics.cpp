#include "prevalid/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prevalid/dist.hpp"
#include "prevalid/external_models.hpp"
#include "prevalid/parallel.hpp"
#include "prevalid/prevalidation.hpp"
#include "prevalid/rng.hpp"

namespace prevalid {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// v = (11' + Cov(gamma))^{-1} 1 via Sherman-Morrison; kappa = 1'v = S/(1+S)
// with S = sum(1/sigma_k^2)
Eigen::VectorXd outside_predictor_weights(const std::vector<double>& sigmas, double& kappa) {
  const int e = static_cast<int>(sigmas.size());
  Eigen::VectorXd inv_var(e);
  for (int k = 0; k < e; ++k) {
    if (sigmas[k] <= 0.0) fail("sample_theorem2: sigmas must be positive");
    inv_var[k] = 1.0 / (sigmas[k] * sigmas[k]);
  }
  const double S = inv_var.sum();
  kappa = S / (1.0 + S);
  return inv_var / (1.0 + S);
}

}  // namespace

double limit_t_statistic(double c, int p) {
  return (c - static_cast<double>(p)) / std::sqrt(c);
}

LimitLawSample sample_theorem1(int p, std::size_t ndraws, std::uint64_t seed) {
  if (p < 1) fail("sample_theorem1: p must be >= 1");
  if (ndraws < 1) fail("sample_theorem1: ndraws must be >= 1");
  LimitLawSample out;
  out.law = LimitLaw::theorem1;
  out.p = p;
  out.seed = seed;
  out.draws.resize(ndraws);
  Rng rng = Rng::substream(seed, 0x71);
  for (std::size_t i = 0; i < ndraws; ++i)
    out.draws[i] = limit_t_statistic(rng.chi_squared(p), p);
  return out;
}

LimitLawSample sample_theorem2(int p, const std::vector<double>& sigmas,
                               std::size_t ndraws, std::uint64_t seed,
                               bool statement_form) {
  if (p < 1) fail("sample_theorem2: p must be >= 1");
  if (sigmas.empty()) fail("sample_theorem2: needs at least one external predictor");
  if (ndraws < 1) fail("sample_theorem2: ndraws must be >= 1");

  double kappa = 0.0;
  const Eigen::VectorXd v = outside_predictor_weights(sigmas, kappa);
  if (1.0 - kappa <= 0.0) fail("sample_theorem2: non-positive 1 - 1'(11'+Cov)^{-1}1");
  const int e = static_cast<int>(sigmas.size());

  LimitLawSample out;
  out.law = LimitLaw::theorem2;
  out.p = p;
  out.sigmas = sigmas;
  out.seed = seed;
  out.draws.resize(ndraws);

  Rng rng = Rng::substream(seed, 0x72);
  Eigen::VectorXd N(p);
  for (std::size_t i = 0; i < ndraws; ++i) {
    for (int j = 0; j < p; ++j) N[j] = rng.normal();
    double nta_v = 0.0;  // N' A v
    for (int k = 0; k < e; ++k) {
      double ntak = 0.0;
      for (int j = 0; j < p; ++j) ntak += N[j] * (sigmas[k] * rng.normal());
      nta_v += ntak * v[k];
    }
    const double ntn = N.squaredNorm();
    const double term1 = (ntn - p) / std::sqrt(ntn);
    const double term2 = nta_v / std::sqrt(ntn * (1.0 - kappa));
    out.draws[i] = statement_form ? term1 - term2
                                  : std::sqrt(1.0 - kappa) * term1 - term2;
  }
  return out;
}

std::vector<double> empirical_null_t(int n, int p, const std::vector<double>& sigmas,
                                     int reps, std::uint64_t seed, int workers,
                                     int* redraws) {
  if (p >= n) fail("empirical_null_t: requires p < n");
  if (reps < 1) fail("empirical_null_t: reps must be >= 1");
  const int e = static_cast<int>(sigmas.size());

  std::vector<double> t(reps);
  std::vector<int> redraw_counts(reps, 0);

  parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t rep) {
    for (int attempt = 0;; ++attempt) {
      Rng rng = Rng::substream(seed, rep, static_cast<std::uint64_t>(attempt));
      Eigen::MatrixXd X(n, p);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
        y[i] = rng.normal();
      }
      Eigen::MatrixXd Z(n, e);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < e; ++k) Z(i, k) = y[i] + sigmas[k] * rng.normal();
      try {
        const Eigen::VectorXd ytilde = loo_linear_prevalidate(X, y);
        const ExternalFit fit = fit_linear_external(ytilde, Z, y, false);
        t[rep] = fit.pv_stat();
        redraw_counts[rep] = attempt;
        return;
      } catch (const std::exception&) {
        if (attempt > 50)
          throw std::runtime_error("empirical_null_t: persistent leverage failures");
      }
    }
  });

  if (redraws) {
    *redraws = 0;
    for (int c : redraw_counts) *redraws += c;
  }
  return t;
}

double ks_distance(std::vector<double> sample_a, std::vector<double> sample_b) {
  if (sample_a.empty() || sample_b.empty()) fail("ks_distance: empty sample");
  std::sort(sample_a.begin(), sample_a.end());
  std::sort(sample_b.begin(), sample_b.end());
  const double na = static_cast<double>(sample_a.size());
  const double nb = static_cast<double>(sample_b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < sample_a.size() && ib < sample_b.size()) {
    const double x = std::min(sample_a[ia], sample_b[ib]);
    while (ia < sample_a.size() && sample_a[ia] <= x) ++ia;
    while (ib < sample_b.size() && sample_b[ib] <= x) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  return d;
}

double ks_distance_to_cdf(std::vector<double> sample,
                          const std::function<double(double)>& cdf) {
  if (sample.empty()) fail("ks_distance_to_cdf: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

LemmaA1Summary lemma_a1_check(int n, int p, int reps, std::uint64_t seed) {
  if (p >= n) fail("lemma_a1_check: requires p < n");
  if (reps < 1) fail("lemma_a1_check: reps must be >= 1");

  LemmaA1Summary summary;
  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(n) * reps);
  std::vector<double> d11(reps), d22(reps);

  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(rep), 0xA1);
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    const Eigen::VectorXd d = hat_diagonal(X);
    const double mean_err = std::abs(d.mean() - static_cast<double>(p) / n);
    summary.max_per_draw_mean_error = std::max(summary.max_per_draw_mean_error, mean_err);
    d11[rep] = d[0];
    d22[rep] = d[1];
    for (int i = 0; i < n; ++i) pooled.push_back(n * d[i]);
  }

  const double m = static_cast<double>(pooled.size());
  double mean = 0.0;
  for (double v : pooled) mean += v;
  mean /= m;
  double var = 0.0;
  for (double v : pooled) var += (v - mean) * (v - mean);
  var /= (m - 1.0);
  summary.mean_n_dii = mean;
  summary.var_n_dii = var;

  const double df = static_cast<double>(p);
  summary.ks_to_chi_squared =
      ks_distance_to_cdf(pooled, [df](double x) { return chi_squared_cdf(x, df); });

  double m1 = 0.0, m2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    m1 += d11[r];
    m2 += d22[r];
  }
  m1 /= reps;
  m2 /= reps;
  double cov = 0.0;
  for (int r = 0; r < reps; ++r) cov += (d11[r] - m1) * (d22[r] - m2);
  summary.cov_d11_d22 = reps > 1 ? cov / (reps - 1.0) : 0.0;
  return summary;
}

}  // namespace prevalid
