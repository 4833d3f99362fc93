#include "prevalid/permutation.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prevalid/parallel.hpp"
#include "prevalid/prevalidation.hpp"
#include "prevalid/rng.hpp"

namespace prevalid {

namespace {

std::optional<std::vector<int>> stratify_labels(const Dataset& data) {
  if (data.outcome_kind != OutcomeKind::binary) return std::nullopt;
  std::vector<int> labels(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) labels[i] = static_cast<int>(data.y[i]);
  return labels;
}

}  // namespace

std::string to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::coefficient: return "coefficient";
    case StatisticKind::t_or_z: return "t_or_z";
    case StatisticKind::deviance: return "deviance";
  }
  throw std::invalid_argument("bad statistic kind");
}

StatisticKind statistic_kind_from_string(const std::string& name) {
  if (name == "coefficient" || name == "beta") return StatisticKind::coefficient;
  if (name == "t_or_z" || name == "t" || name == "z") return StatisticKind::t_or_z;
  if (name == "deviance") return StatisticKind::deviance;
  throw std::invalid_argument("unknown statistic kind '" + name + "'");
}

PipelineStats run_pv_pipeline(const Dataset& data, const InternalModelSpec& spec,
                              ExternalKind external_kind, int num_folds,
                              bool include_intercept, std::uint64_t fold_seed,
                              std::uint64_t fit_seed) {
  Eigen::VectorXd ytilde;
  if (num_folds == 1) {
    // re-use method: no pre-validation
    const auto model = fit_internal(data.X, data.y, spec, fit_seed);
    ytilde = predict(model, data.X);
  } else {
    const auto folds =
        make_folds(static_cast<int>(data.n()), num_folds, stratify_labels(data), fold_seed);
    ytilde = prevalidate(data, spec, folds, fit_seed).ytilde;
  }

  const ExternalFit fit = fit_external(external_kind, ytilde, data.Z, data.y,
                                       include_intercept);
  PipelineStats stats;
  stats.beta = fit.pv_coef();
  stats.stat = fit.pv_stat();
  stats.dev = fit.pv_delta_deviance();
  stats.p_one_sided = fit.p_pv_one_sided;
  stats.separation = fit.separation;
  return stats;
}

std::array<PermutationResult, 3> permutation_test_all(
    const Dataset& data, const InternalModelSpec& spec, ExternalKind external_kind,
    int num_folds, int B, std::uint64_t seed, const PermutationOptions& options) {
  if (B < 1) throw std::invalid_argument("permutation_test: B must be >= 1");
  data.validate();

  // observed statistic, computed once; replicate 0 is the unpermuted pipeline
  const PipelineStats observed =
      run_pv_pipeline(data, spec, external_kind, num_folds, options.include_intercept,
                      Rng::substream(seed, 0, 1).next_u64(),
                      Rng::substream(seed, 0, 2).next_u64());

  struct Replicate {
    PipelineStats stats;
    bool ok = false;
  };
  std::vector<Replicate> reps(B);
  const Eigen::Index n = data.n();

  parallel_for(static_cast<std::size_t>(B), options.workers, [&](std::size_t b) {
    const std::uint64_t rep = static_cast<std::uint64_t>(b) + 1;
    Dataset permuted = data;
    Rng perm_rng = Rng::substream(seed, rep, 3);
    const std::vector<int> perm = perm_rng.permutation(static_cast<int>(n));
    for (Eigen::Index i = 0; i < n; ++i) permuted.X.row(i) = data.X.row(perm[i]);

    const std::uint64_t fold_seed = options.redraw_folds
                                        ? Rng::substream(seed, rep, 1).next_u64()
                                        : Rng::substream(seed, 0, 1).next_u64();
    try {
      reps[b].stats = run_pv_pipeline(permuted, spec, external_kind, num_folds,
                                      options.include_intercept, fold_seed,
                                      Rng::substream(seed, rep, 2).next_u64());
      reps[b].ok = true;
    } catch (const std::exception&) {
      reps[b].ok = false;
    }
  });

  std::array<PermutationResult, 3> results;
  const StatisticKind kinds[3] = {StatisticKind::coefficient, StatisticKind::t_or_z,
                                  StatisticKind::deviance};
  for (int k = 0; k < 3; ++k) {
    PermutationResult& res = results[k];
    res.statistic_kind = kinds[k];
    res.B = B;
    res.seed = seed;
    auto value = [&](const PipelineStats& s) {
      switch (kinds[k]) {
        case StatisticKind::coefficient: return s.beta;
        case StatisticKind::t_or_z: return s.stat;
        case StatisticKind::deviance: return s.dev;
      }
      return 0.0;
    };
    // a separated logistic fit leaves the Wald statistic unusable; the
    // coefficient and deviance entries are kept (see the median-bias study)
    auto usable = [&](const Replicate& r) {
      if (!r.ok) return false;
      if (kinds[k] == StatisticKind::t_or_z && r.stats.separation) return false;
      return std::isfinite(value(r.stats));
    };

    res.observed = value(observed);
    if (kinds[k] == StatisticKind::t_or_z && observed.separation) res.invalid = true;

    int at_least = 0;
    for (const auto& r : reps) {
      if (!usable(r)) {
        ++res.failed;
        continue;
      }
      const double v = value(r.stats);
      res.permuted.push_back(v);
      if (v >= res.observed) ++at_least;
    }
    if (res.permuted.empty() || res.failed > B / 20) res.invalid = true;
    res.p_value = res.permuted.empty()
                      ? 1.0
                      : static_cast<double>(at_least) / static_cast<double>(res.permuted.size());
  }
  return results;
}

PermutationResult permutation_test(const Dataset& data, const InternalModelSpec& spec,
                                   ExternalKind external_kind, StatisticKind statistic_kind,
                                   int num_folds, int B, std::uint64_t seed,
                                   const PermutationOptions& options) {
  const auto all = permutation_test_all(data, spec, external_kind, num_folds, B, seed, options);
  switch (statistic_kind) {
    case StatisticKind::coefficient: return all[0];
    case StatisticKind::t_or_z: return all[1];
    case StatisticKind::deviance: return all[2];
  }
  throw std::invalid_argument("bad statistic kind");
}

nlohmann::json PermutationResult::to_json() const {
  nlohmann::json j;
  j["statistic_kind"] = to_string(statistic_kind);
  j["observed"] = observed;
  j["p_value"] = p_value;
  j["B"] = B;
  j["failed"] = failed;
  j["invalid"] = invalid;
  j["seed"] = seed;
  j["permuted"] = std::vector<double>(permuted.begin(), permuted.end());
  return j;
}

}  // namespace prevalid
