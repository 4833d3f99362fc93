#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "prevalid/data_model.hpp"
#include "prevalid/external_models.hpp"
#include "prevalid/internal_models.hpp"

namespace prevalid {

enum class StatisticKind { coefficient, t_or_z, deviance };

std::string to_string(StatisticKind kind);
StatisticKind statistic_kind_from_string(const std::string& name);

// One full run of the pipeline being tested: fold draw, pre-validation,
// external fit. num_folds == 1 means the re-use method (fit and predict on
// the same data, no pre-validation).
struct PipelineStats {
  double beta = 0.0;
  double stat = 0.0;   // t or z for the PV coefficient
  double dev = 0.0;    // deviance drop for the PV column
  double p_one_sided = 1.0;  // analytical one-sided p for the PV coefficient
  bool separation = false;
};

PipelineStats run_pv_pipeline(const Dataset& data, const InternalModelSpec& spec,
                              ExternalKind external_kind, int num_folds,
                              bool include_intercept, std::uint64_t fold_seed,
                              std::uint64_t fit_seed);

struct PermutationResult {
  StatisticKind statistic_kind = StatisticKind::t_or_z;
  double observed = 0.0;
  std::vector<double> permuted;  // successful replicates only
  double p_value = 1.0;          // #{permuted >= observed} / #successful
  int B = 0;                     // requested permutation count
  int failed = 0;
  bool invalid = false;          // > 5% of replicates failed, or observed unusable
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct PermutationOptions {
  bool include_intercept = false;
  bool redraw_folds = true;  // fresh fold draw inside each permutation replicate
  int workers = 1;
};

// Permutes the rows of X only (y and Z fixed), re-runs the full PV pipeline
// per replicate and reports all three test statistics against their
// permutation distributions. One-sided p, ties count as >= (no boundary
// randomization).
std::array<PermutationResult, 3> permutation_test_all(
    const Dataset& data, const InternalModelSpec& spec, ExternalKind external_kind,
    int num_folds, int B, std::uint64_t seed, const PermutationOptions& options = {});

PermutationResult permutation_test(const Dataset& data, const InternalModelSpec& spec,
                                   ExternalKind external_kind, StatisticKind statistic_kind,
                                   int num_folds, int B, std::uint64_t seed,
                                   const PermutationOptions& options = {});

}  // namespace prevalid
