#include "prevalid/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prevalid/parallel.hpp"
#include "prevalid/prevalidation.hpp"
#include "prevalid/rng.hpp"

namespace prevalid {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double binomial_se(double rate, int reps) {
  return std::sqrt(std::max(rate * (1.0 - rate), 0.0) / static_cast<double>(reps));
}

double median(std::vector<double> v) {
  if (v.empty()) fail("median of empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return 0.5 * (v[mid - 1] + hi);
}

// empirical alpha-quantile used as the bias-adjusted p-value cutoff
double lower_quantile(std::vector<double> sorted, double alpha) {
  const int m = static_cast<int>(sorted.size());
  int k = static_cast<int>(std::ceil(alpha * m)) - 1;
  k = std::clamp(k, 0, m - 1);
  return sorted[k];
}

}  // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::linear_linear: return "linear_linear";
    case Scenario::lasso_linear: return "lasso_linear";
    case Scenario::lda_logistic: return "lda_logistic";
  }
  fail("bad scenario");
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "linear_linear") return Scenario::linear_linear;
  if (name == "lasso_linear") return Scenario::lasso_linear;
  if (name == "lda_logistic") return Scenario::lda_logistic;
  fail("unknown scenario '" + name + "'");
}

void ScenarioConfig::validate() const {
  if (n < 4) fail("scenario: n must be >= 4");
  if (p < 1) fail("scenario: p must be >= 1");
  if (e < 0) fail("scenario: e must be >= 0");
  if (num_folds < 1 || num_folds > n) fail("scenario: K must be in [1, n]");
  if (sigma_I <= 0.0 || sigma_E <= 0.0 || sigma <= 0.0) fail("scenario: sigmas must be > 0");
  switch (scenario) {
    case Scenario::linear_linear:
      if (beta.size() != 0 && beta.size() != p) fail("linear_linear: beta length must be p");
      break;
    case Scenario::lasso_linear:
      if (s < 0 || s > p) fail("lasso_linear: s must be in [0, p]");
      if (beta.size() != 0 && beta.size() < s) fail("lasso_linear: beta shorter than s");
      if (l < 1 || l > p) fail("lasso_linear: l must be in [1, p]");
      break;
    case Scenario::lda_logistic: {
      if (s < 0 || s > p) fail("lda_logistic: s must be in [0, p]");
      if (g < 1 || g > p) fail("lda_logistic: g must be in [1, p]");
      if (p_flip < 0.0 || p_flip > 1.0) fail("lda_logistic: p_E must be in [0, 1]");
      const int g1 = n1 > 0 ? n1 : n / 2;
      const int g2 = n2 > 0 ? n2 : n - n / 2;
      if (g1 + g2 != n || g1 < 2 || g2 < 2) fail("lda_logistic: bad group sizes");
      break;
    }
  }
}

bool ScenarioConfig::is_null() const {
  switch (scenario) {
    case Scenario::linear_linear:
      return beta.size() == 0 || beta.isZero(0.0);
    case Scenario::lasso_linear:
      return s == 0 || beta.size() == 0 || beta.head(s).isZero(0.0);
    case Scenario::lda_logistic:
      return s == 0 || mu == 0.0;
  }
  return false;
}

InternalModelSpec ScenarioConfig::internal_spec() const {
  InternalModelSpec spec;
  switch (scenario) {
    case Scenario::linear_linear:
      spec.kind = ModelKind::ols;
      break;
    case Scenario::lasso_linear:
      spec.kind = ModelKind::lasso_l;
      spec.l = l;
      spec.center = true;  // conventional lasso practice: center, fit an intercept
      break;
    case Scenario::lda_logistic:
      spec.kind = ModelKind::lda_top_g;
      spec.g = g;
      break;
  }
  return spec;
}

ExternalKind ScenarioConfig::external_kind() const {
  return scenario == Scenario::lda_logistic ? ExternalKind::logistic : ExternalKind::linear;
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json j;
  j["scenario"] = to_string(scenario);
  j["n"] = n;
  j["p"] = p;
  j["e"] = e;
  j["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
  j["s"] = s;
  j["sigma_I"] = sigma_I;
  j["sigma_E"] = sigma_E;
  j["sigma"] = sigma;
  j["l"] = l;
  j["g"] = g;
  j["mu"] = mu;
  j["p_E"] = p_flip;
  j["K"] = num_folds;
  j["n1"] = n1;
  j["n2"] = n2;
  j["intercept"] = include_intercept;
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  c.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  c.n = j.at("n").get<int>();
  c.p = j.at("p").get<int>();
  c.e = j.value("e", 1);
  if (j.contains("beta")) {
    const auto b = j["beta"].get<std::vector<double>>();
    c.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  }
  c.s = j.value("s", 0);
  c.sigma_I = j.value("sigma_I", 1.0);
  c.sigma_E = j.value("sigma_E", 1.0);
  c.sigma = j.value("sigma", 1.0);
  c.l = j.value("l", 0);
  c.g = j.value("g", 0);
  c.mu = j.value("mu", 0.0);
  c.p_flip = j.value("p_E", 0.0);
  c.num_folds = j.value("K", 10);
  c.n1 = j.value("n1", 0);
  c.n2 = j.value("n2", 0);
  c.include_intercept = j.value("intercept", false);
  c.validate();
  return c;
}

Dataset gen_linear_linear(const ScenarioConfig& config, Rng& rng) {
  Dataset d;
  d.X.resize(config.n, config.p);
  for (int i = 0; i < config.n; ++i)
    for (int j = 0; j < config.p; ++j) d.X(i, j) = rng.normal();

  Eigen::VectorXd beta = config.beta.size() == config.p
                             ? config.beta
                             : Eigen::VectorXd::Zero(config.p);
  const Eigen::VectorXd mean = d.X * beta;
  d.y.resize(config.n);
  for (int i = 0; i < config.n; ++i) d.y[i] = mean[i] + config.sigma_I * rng.normal();

  d.Z.resize(config.n, config.e);
  for (int i = 0; i < config.n; ++i)
    for (int k = 0; k < config.e; ++k)
      d.Z(i, k) = d.y[i] + config.sigma_E * rng.normal();
  d.outcome_kind = OutcomeKind::continuous;
  return d;
}

Dataset gen_lasso_linear(const ScenarioConfig& config, Rng& rng) {
  ScenarioConfig dense = config;
  dense.beta = Eigen::VectorXd::Zero(config.p);
  for (int j = 0; j < config.s && j < config.beta.size(); ++j)
    dense.beta[j] = config.beta[j];
  return gen_linear_linear(dense, rng);
}

Dataset gen_lda_logistic(const ScenarioConfig& config, Rng& rng) {
  const int g1 = config.n1 > 0 ? config.n1 : config.n / 2;
  Dataset d;
  d.y.resize(config.n);
  d.X.resize(config.n, config.p);
  for (int i = 0; i < config.n; ++i) {
    const bool group2 = i >= g1;
    d.y[i] = group2 ? 1.0 : 0.0;
    for (int j = 0; j < config.p; ++j) {
      const double mean = (group2 && j < config.s) ? config.mu : 0.0;
      d.X(i, j) = mean + config.sigma * rng.normal();
    }
  }
  d.Z.resize(config.n, config.e);
  for (int i = 0; i < config.n; ++i)
    for (int k = 0; k < config.e; ++k)
      d.Z(i, k) = rng.bernoulli(config.p_flip) ? 1.0 - d.y[i] : d.y[i];
  d.outcome_kind = OutcomeKind::binary;
  return d;
}

Dataset generate_scenario(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  switch (config.scenario) {
    case Scenario::linear_linear: return gen_linear_linear(config, rng);
    case Scenario::lasso_linear: return gen_lasso_linear(config, rng);
    case Scenario::lda_logistic: return gen_lda_logistic(config, rng);
  }
  fail("bad scenario");
}

namespace {

// analytical one-sided p for the PV coefficient on one simulated dataset;
// NaN marks a failed replicate
double analytical_p_once(const ScenarioConfig& config, std::uint64_t seed,
                         std::uint64_t rep, bool* separated = nullptr) {
  Rng gen = Rng::substream(seed, rep, 10);
  const Dataset data = generate_scenario(config, gen);
  try {
    const PipelineStats stats = run_pv_pipeline(
        data, config.internal_spec(), config.external_kind(), config.num_folds,
        config.include_intercept, Rng::substream(seed, rep, 11).next_u64(),
        Rng::substream(seed, rep, 12).next_u64());
    if (separated) *separated = stats.separation;
    if (stats.separation) return std::nan("");  // z-based p unusable
    return stats.p_one_sided;
  } catch (const std::exception&) {
    return std::nan("");
  }
}

}  // namespace

TypeIErrorReport estimate_type1(const ScenarioConfig& config,
                                const std::vector<double>& alphas, int reps,
                                std::uint64_t seed, int workers) {
  config.validate();
  if (!config.is_null()) fail("estimate_type1: configuration is not a null scenario");
  if (reps < 1) fail("estimate_type1: reps must be >= 1");

  std::vector<double> pvals(reps);
  parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t rep) {
    pvals[rep] = analytical_p_once(config, seed, rep);
  });

  TypeIErrorReport report;
  report.config = config;
  report.alphas = alphas;
  report.reps = reps;
  report.seed = seed;
  int ok = 0;
  for (double alpha : alphas) {
    int reject = 0;
    ok = 0;
    for (double p : pvals) {
      if (std::isnan(p)) continue;
      ++ok;
      if (p <= alpha) ++reject;
    }
    const double rate = ok > 0 ? static_cast<double>(reject) / ok : 0.0;
    report.rates.push_back(rate);
    report.std_errors.push_back(ok > 0 ? binomial_se(rate, ok) : 0.0);
  }
  report.failed = reps - ok;
  report.flagged = report.failed * 20 > reps;
  return report;
}

PermutationLevelReport estimate_permutation_level(const ScenarioConfig& config,
                                                  const std::vector<double>& alphas,
                                                  int outer_reps, int B,
                                                  std::uint64_t seed, int workers) {
  config.validate();
  if (!config.is_null()) fail("estimate_permutation_level: configuration is not null");
  if (outer_reps < 1 || B < 1) fail("estimate_permutation_level: bad replication counts");

  // p-values per replicate and statistic kind; NaN marks invalid results
  std::vector<std::array<double, 3>> pvals(outer_reps);
  std::vector<char> separated(outer_reps, 0);

  parallel_for(static_cast<std::size_t>(outer_reps), workers, [&](std::size_t rep) {
    Rng gen = Rng::substream(seed, rep, 20);
    const Dataset data = generate_scenario(config, gen);
    PermutationOptions opts;
    opts.include_intercept = config.include_intercept;
    opts.workers = 1;
    try {
      const auto results = permutation_test_all(
          data, config.internal_spec(), config.external_kind(), config.num_folds, B,
          Rng::substream(seed, rep, 21).next_u64(), opts);
      for (int k = 0; k < 3; ++k)
        pvals[rep][k] = results[k].invalid ? std::nan("") : results[k].p_value;
      separated[rep] = results[1].invalid ? 1 : 0;
    } catch (const std::exception&) {
      for (int k = 0; k < 3; ++k) pvals[rep][k] = std::nan("");
      separated[rep] = 0;
    }
  });

  PermutationLevelReport report;
  report.config = config;
  report.alphas = alphas;
  report.outer_reps = outer_reps;
  report.B = B;
  report.seed = seed;
  report.rates.assign(3, {});
  report.within_2se.assign(3, {});

  int sep_count = 0;
  for (char c : separated) sep_count += c;
  report.separation_fraction = static_cast<double>(sep_count) / outer_reps;

  int max_failed = 0;
  for (int k = 0; k < 3; ++k) {
    for (double alpha : alphas) {
      int reject = 0, ok = 0;
      for (const auto& pv : pvals) {
        if (std::isnan(pv[k])) continue;
        ++ok;
        if (pv[k] <= alpha) ++reject;
      }
      const double rate = ok > 0 ? static_cast<double>(reject) / ok : 0.0;
      report.rates[k].push_back(rate);
      const double se = binomial_se(alpha, std::max(ok, 1));
      report.within_2se[k].push_back(std::abs(rate - alpha) <= 2.0 * se);
      max_failed = std::max(max_failed, outer_reps - ok);
    }
  }
  report.failed = max_failed;
  return report;
}

PowerReport estimate_power(const ScenarioConfig& null_config,
                           const ScenarioConfig& alt_config,
                           const std::vector<double>& alphas, int reps, int B,
                           std::uint64_t seed, int workers) {
  null_config.validate();
  alt_config.validate();
  if (!null_config.is_null()) fail("estimate_power: null_config is not null");

  // step 1: analytical p-value null distribution -> bias-adjusted cutoffs
  std::vector<double> null_p(reps);
  parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t rep) {
    null_p[rep] = analytical_p_once(null_config, seed, rep);
  });
  std::vector<double> null_ok;
  for (double p : null_p)
    if (!std::isnan(p)) null_ok.push_back(p);
  if (null_ok.empty()) throw std::runtime_error("estimate_power: all null replicates failed");
  std::sort(null_ok.begin(), null_ok.end());

  PowerReport report;
  report.null_config = null_config;
  report.alt_config = alt_config;
  report.alphas = alphas;
  report.reps = reps;
  report.B = B;
  report.seed = seed;
  for (double alpha : alphas)
    report.adjusted_cutoffs.push_back(lower_quantile(null_ok, alpha));

  // step 2: alternative replicates, both analytical and permutation decisions
  struct AltRep {
    double p_analytical = std::nan("");
    double p_perm = std::nan("");
  };
  std::vector<AltRep> alt(reps);
  parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t rep) {
    const std::uint64_t alt_seed = mix64(seed ^ 0xa17);
    alt[rep].p_analytical = analytical_p_once(alt_config, alt_seed, rep);
    Rng gen = Rng::substream(alt_seed, rep, 10);
    const Dataset data = generate_scenario(alt_config, gen);
    PermutationOptions opts;
    opts.include_intercept = alt_config.include_intercept;
    try {
      const auto res = permutation_test(data, alt_config.internal_spec(),
                                        alt_config.external_kind(), StatisticKind::t_or_z,
                                        alt_config.num_folds, B,
                                        Rng::substream(alt_seed, rep, 30).next_u64(), opts);
      if (!res.invalid) alt[rep].p_perm = res.p_value;
    } catch (const std::exception&) {
    }
  });

  for (std::size_t a = 0; a < alphas.size(); ++a) {
    int rej_an = 0, ok_an = 0, rej_pm = 0, ok_pm = 0;
    for (const auto& r : alt) {
      if (!std::isnan(r.p_analytical)) {
        ++ok_an;
        if (r.p_analytical <= report.adjusted_cutoffs[a]) ++rej_an;
      }
      if (!std::isnan(r.p_perm)) {
        ++ok_pm;
        if (r.p_perm <= alphas[a]) ++rej_pm;
      }
    }
    report.analytical_power.push_back(ok_an > 0 ? static_cast<double>(rej_an) / ok_an : 0.0);
    report.permutation_power.push_back(ok_pm > 0 ? static_cast<double>(rej_pm) / ok_pm : 0.0);
  }
  return report;
}

BiasReport coefficient_bias_study(const ScenarioConfig& alt_config, int reps,
                                  std::uint64_t seed, int workers) {
  alt_config.validate();
  if (reps < 2) fail("coefficient_bias_study: reps must be >= 2");

  std::vector<double> pv_coef(reps, std::nan("")), bench_coef(reps, std::nan(""));
  std::vector<char> separated(reps, 0);

  parallel_for(static_cast<std::size_t>(reps), workers, [&](std::size_t rep) {
    Rng gen = Rng::substream(seed, rep, 40);
    const Dataset train = generate_scenario(alt_config, gen);

    try {
      const PipelineStats stats = run_pv_pipeline(
          train, alt_config.internal_spec(), alt_config.external_kind(),
          alt_config.num_folds, alt_config.include_intercept,
          Rng::substream(seed, rep, 41).next_u64(),
          Rng::substream(seed, rep, 42).next_u64());
      pv_coef[rep] = stats.beta;  // separated fits stay in the medians
      if (stats.separation) separated[rep] = 1;
    } catch (const std::exception&) {
    }

    try {
      // benchmark: rule fit on the whole training dataset, external fit on an
      // independently simulated test dataset of the same size
      const auto model = fit_internal(train.X, train.y, alt_config.internal_spec(),
                                      Rng::substream(seed, rep, 43).next_u64());
      Rng test_gen = Rng::substream(seed, rep, 44);
      const Dataset test = generate_scenario(alt_config, test_gen);
      const Eigen::VectorXd yhat = predict(model, test.X);
      const ExternalFit fit = fit_external(alt_config.external_kind(), yhat, test.Z,
                                           test.y, alt_config.include_intercept);
      bench_coef[rep] = fit.pv_coef();
      if (fit.separation) separated[rep] = 1;
    } catch (const std::exception&) {
    }
  });

  std::vector<double> pv_ok, bench_ok;
  std::vector<std::pair<double, double>> pairs;
  for (int r = 0; r < reps; ++r) {
    if (!std::isnan(pv_coef[r])) pv_ok.push_back(pv_coef[r]);
    if (!std::isnan(bench_coef[r])) bench_ok.push_back(bench_coef[r]);
    if (!std::isnan(pv_coef[r]) && !std::isnan(bench_coef[r]))
      pairs.emplace_back(pv_coef[r], bench_coef[r]);
  }

  BiasReport report;
  report.config = alt_config;
  report.reps = reps;
  report.seed = seed;
  for (char c : separated) report.separated += c;
  report.median_pv = median(pv_ok);
  report.median_benchmark = median(bench_ok);
  report.bias = report.median_pv - report.median_benchmark;

  // bootstrap SE of the median difference over paired replicates
  const int n_boot = 500;
  Rng boot_rng = Rng::substream(seed, 0xb007);
  std::vector<double> boot_diffs(n_boot);
  std::vector<double> a(pairs.size()), b(pairs.size());
  for (int bi = 0; bi < n_boot; ++bi) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& pick = pairs[boot_rng.below(pairs.size())];
      a[i] = pick.first;
      b[i] = pick.second;
    }
    boot_diffs[bi] = median(a) - median(b);
  }
  double bm = std::accumulate(boot_diffs.begin(), boot_diffs.end(), 0.0) / n_boot;
  double bv = 0.0;
  for (double v : boot_diffs) bv += (v - bm) * (v - bm);
  report.bias_se = std::sqrt(bv / (n_boot - 1));
  return report;
}

std::string TypeIErrorReport::to_csv() const {
  std::ostringstream out;
  out << "scenario,n,p,e,K,alpha,rate,se,reps,failed\n";
  char line[256];
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%d,%g,%.6f,%.6f,%d,%d\n",
                  to_string(config.scenario).c_str(), config.n, config.p, config.e,
                  config.num_folds, alphas[a], rates[a], std_errors[a], reps, failed);
    out << line;
  }
  return out.str();
}

nlohmann::json TypeIErrorReport::to_json() const {
  nlohmann::json j;
  j["config"] = config.to_json();
  j["alphas"] = alphas;
  j["rates"] = rates;
  j["std_errors"] = std_errors;
  j["reps"] = reps;
  j["failed"] = failed;
  j["flagged"] = flagged;
  j["seed"] = seed;
  j["decision"] = decision;
  return j;
}

std::string PermutationLevelReport::to_csv() const {
  std::ostringstream out;
  out << "scenario,n,p,e,K,statistic,alpha,rate,within_2se,outer_reps,B,failed\n";
  const char* kind_names[3] = {"coefficient", "t_or_z", "deviance"};
  char line[256];
  for (int k = 0; k < 3; ++k) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%d,%s,%g,%.6f,%d,%d,%d,%d\n",
                    to_string(config.scenario).c_str(), config.n, config.p, config.e,
                    config.num_folds, kind_names[k], alphas[a], rates[k][a],
                    within_2se[k][a] ? 1 : 0, outer_reps, B, failed);
      out << line;
    }
  }
  return out.str();
}

nlohmann::json PermutationLevelReport::to_json() const {
  nlohmann::json j;
  j["config"] = config.to_json();
  j["alphas"] = alphas;
  j["rates"] = {{"coefficient", rates[0]}, {"t_or_z", rates[1]}, {"deviance", rates[2]}};
  j["outer_reps"] = outer_reps;
  j["B"] = B;
  j["failed"] = failed;
  j["separation_fraction"] = separation_fraction;
  j["seed"] = seed;
  return j;
}

std::string PowerReport::to_csv() const {
  std::ostringstream out;
  out << "scenario,n,p,e,K,alpha,adjusted_cutoff,analytical_power,permutation_power,reps,B\n";
  char line[256];
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%d,%g,%.6f,%.6f,%.6f,%d,%d\n",
                  to_string(alt_config.scenario).c_str(), alt_config.n, alt_config.p,
                  alt_config.e, alt_config.num_folds, alphas[a], adjusted_cutoffs[a],
                  analytical_power[a], permutation_power[a], reps, B);
    out << line;
  }
  return out.str();
}

nlohmann::json PowerReport::to_json() const {
  nlohmann::json j;
  j["null_config"] = null_config.to_json();
  j["alt_config"] = alt_config.to_json();
  j["alphas"] = alphas;
  j["adjusted_cutoffs"] = adjusted_cutoffs;
  j["analytical_power"] = analytical_power;
  j["permutation_power"] = permutation_power;
  j["reps"] = reps;
  j["B"] = B;
  j["seed"] = seed;
  return j;
}

std::string BiasReport::to_csv() const {
  std::ostringstream out;
  out << "scenario,n,p,e,K,median_pv,median_benchmark,bias,bias_se,reps,separated\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%d,%.6f,%.6f,%.6f,%.6f,%d,%d\n",
                to_string(config.scenario).c_str(), config.n, config.p, config.e,
                config.num_folds, median_pv, median_benchmark, bias, bias_se, reps,
                separated);
  out << line;
  return out.str();
}

nlohmann::json BiasReport::to_json() const {
  nlohmann::json j;
  j["config"] = config.to_json();
  j["median_pv"] = median_pv;
  j["median_benchmark"] = median_benchmark;
  j["bias"] = bias;
  j["bias_se"] = bias_se;
  j["reps"] = reps;
  j["separated"] = separated;
  j["seed"] = seed;
  return j;
}

}  // namespace prevalid
