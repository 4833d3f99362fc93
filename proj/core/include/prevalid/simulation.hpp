#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prevalid/data_model.hpp"
#include "prevalid/external_models.hpp"
#include "prevalid/internal_models.hpp"
#include "prevalid/permutation.hpp"

namespace prevalid {

class Rng;

enum class Scenario { linear_linear, lasso_linear, lda_logistic };

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);

// Generator parameters for the three simulation scenarios. sigma_I, sigma_E
// and sigma (the lda noise SD) default to 1.
struct ScenarioConfig {
  Scenario scenario = Scenario::linear_linear;
  int n = 0;
  int p = 0;
  int e = 1;
  Eigen::VectorXd beta;     // linear/lasso: length p (lasso: first s entries set)
  int s = 0;                // true-signal count (lasso, lda)
  double sigma_I = 1.0;     // response noise SD
  double sigma_E = 1.0;     // external predictor noise SD (all k)
  int l = 0;                // lasso sparsity
  int g = 0;                // lda feature count
  double mu = 0.0;          // lda mean offset for signal genes
  double sigma = 1.0;       // lda feature noise SD
  double p_flip = 0.0;      // lda external label-flip probability (p_E)
  int num_folds = 10;       // K; 1 means the re-use method
  int n1 = 0, n2 = 0;       // lda group sizes; 0 means n/2 each
  bool include_intercept = false;  // external model mode

  void validate() const;
  bool is_null() const;
  InternalModelSpec internal_spec() const;
  ExternalKind external_kind() const;

  nlohmann::json to_json() const;
  static ScenarioConfig from_json(const nlohmann::json& j);
};

Dataset gen_linear_linear(const ScenarioConfig& config, Rng& rng);
Dataset gen_lasso_linear(const ScenarioConfig& config, Rng& rng);
Dataset gen_lda_logistic(const ScenarioConfig& config, Rng& rng);
Dataset generate_scenario(const ScenarioConfig& config, Rng& rng);

struct TypeIErrorReport {
  ScenarioConfig config;
  std::vector<double> alphas;
  std::vector<double> rates;        // rejection fraction per alpha
  std::vector<double> std_errors;   // sqrt(rate (1-rate) / reps)
  int reps = 0;
  int failed = 0;
  bool flagged = false;             // > 5% of replicates failed
  std::uint64_t seed = 0;
  std::string decision = "analytical";

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Null-scenario type I error of the analytical one-sided test for the PV
// coefficient at each alpha.
TypeIErrorReport estimate_type1(const ScenarioConfig& config,
                                const std::vector<double>& alphas, int reps,
                                std::uint64_t seed, int workers = 1);

// As estimate_type1, but the rejection decision uses the permutation test
// p-value (B permutations per replicate). Reports per statistic kind.
struct PermutationLevelReport {
  ScenarioConfig config;
  std::vector<double> alphas;
  // rates[kind][alpha] for kinds {coefficient, t_or_z, deviance}
  std::vector<std::vector<double>> rates;
  std::vector<std::vector<bool>> within_2se;  // |rate - alpha| <= 2 SE(alpha)
  int outer_reps = 0;
  int B = 0;
  int failed = 0;
  double separation_fraction = 0.0;  // observed fits with separation
  std::uint64_t seed = 0;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

PermutationLevelReport estimate_permutation_level(const ScenarioConfig& config,
                                                  const std::vector<double>& alphas,
                                                  int outer_reps, int B,
                                                  std::uint64_t seed, int workers = 1);

struct PowerReport {
  ScenarioConfig null_config;
  ScenarioConfig alt_config;
  std::vector<double> alphas;
  std::vector<double> adjusted_cutoffs;    // empirical alpha-quantiles of null p
  std::vector<double> analytical_power;    // at the adjusted cutoff
  std::vector<double> permutation_power;   // at the nominal alpha
  int reps = 0;
  int B = 0;
  std::uint64_t seed = 0;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Bias-adjusted power comparison: the analytical cutoff is calibrated on the
// null configuration so the analytical test attains its nominal level, then
// both tests are evaluated under the alternative.
PowerReport estimate_power(const ScenarioConfig& null_config,
                           const ScenarioConfig& alt_config,
                           const std::vector<double>& alphas, int reps, int B,
                           std::uint64_t seed, int workers = 1);

struct BiasReport {
  ScenarioConfig config;
  double median_pv = 0.0;         // median PV coefficient estimate
  double median_benchmark = 0.0;  // independent-test-set benchmark
  double bias = 0.0;              // median_pv - median_benchmark
  double bias_se = 0.0;           // bootstrap SE of the median difference
  int reps = 0;
  int separated = 0;              // separated logistic fits (kept in medians)
  std::uint64_t seed = 0;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Median of the PV coefficient vs the benchmark: fit the internal rule on
// the dataset, then fit the external model on an independently simulated
// test dataset of the same size.
BiasReport coefficient_bias_study(const ScenarioConfig& alt_config, int reps,
                                  std::uint64_t seed, int workers = 1);

}  // namespace prevalid
