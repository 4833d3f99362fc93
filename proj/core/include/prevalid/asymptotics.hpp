#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace prevalid {

enum class LimitLaw { theorem1, theorem2 };

struct LimitLawSample {
  LimitLaw law = LimitLaw::theorem1;
  int p = 0;
  std::vector<double> sigmas;  // theorem2 only
  std::vector<double> draws;
  std::uint64_t seed = 0;
};

// statistic value at an injected chi^2_p variate: (c - p) / sqrt(c)
double limit_t_statistic(double c, int p);

// Limiting null law of the PV t-statistic with no external predictors:
// (C - p)/sqrt(C), C ~ chi^2_p.
LimitLawSample sample_theorem1(int p, std::size_t ndraws, std::uint64_t seed);

// Limiting null law with e external predictors of noise SDs sigmas. Samples
// the combined expression from the proof,
//   sqrt(1-kappa) (N'N - p)/sqrt(N'N) - N'A v / sqrt(N'N (1-kappa)),
// with v = (11' + Cov(gamma))^{-1} 1 and kappa = 1'v. The theorem statement
// omits the sqrt(1-kappa) factor on the first term; the proof's form is the
// one the finite-n pipeline converges to. statement_form = true samples the
// statement's expression instead, for side-by-side comparison.
LimitLawSample sample_theorem2(int p, const std::vector<double>& sigmas,
                               std::size_t ndraws, std::uint64_t seed,
                               bool statement_form = false);

// Finite-n null pipeline: X, y i.i.d. standard normal, Z_ik = y_i + gamma_ik,
// leave-one-out PV, intercept-free external linear fit; returns the t
// statistics for the PV coefficient. Leverage failures are redrawn (counted).
std::vector<double> empirical_null_t(int n, int p, const std::vector<double>& sigmas,
                                     int reps, std::uint64_t seed, int workers = 1,
                                     int* redraws = nullptr);

// exact two-sample Kolmogorov-Smirnov statistic
double ks_distance(std::vector<double> sample_a, std::vector<double> sample_b);

// one-sample KS statistic against a reference CDF
double ks_distance_to_cdf(std::vector<double> sample,
                          const std::function<double(double)>& cdf);

struct LemmaA1Summary {
  double mean_n_dii = 0.0;        // pooled mean of n * d_ii (targets p)
  double var_n_dii = 0.0;         // pooled variance (targets 2p)
  double ks_to_chi_squared = 0.0; // pooled n*d_ii vs chi^2_p
  double max_per_draw_mean_error = 0.0;  // |mean(d_ii) - p/n| per draw, max
  double cov_d11_d22 = 0.0;       // sample covariance across draws (negative)
};

LemmaA1Summary lemma_a1_check(int n, int p, int reps, std::uint64_t seed);

}  // namespace prevalid
