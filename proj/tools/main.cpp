// prevalid: command-line front end for pre-validation analysis, permutation
// testing, simulation campaigns, and asymptotic verification.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "prevalid/asymptotics.hpp"
#include "prevalid/data_model.hpp"
#include "prevalid/external_models.hpp"
#include "prevalid/internal_models.hpp"
#include "prevalid/permutation.hpp"
#include "prevalid/prevalidation.hpp"
#include "prevalid/rng.hpp"
#include "prevalid/simulation.hpp"

using json = nlohmann::json;
using namespace prevalid;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// FNV-1a over the resolved config; the 8-hex-digit tag makes output
// filenames deterministic functions of command + configuration.
std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08llx",
                static_cast<unsigned long long>(h & 0xffffffffull));
  return buf;
}

std::string output_path(const std::string& outdir, const std::string& command,
                        const json& resolved, const std::string& ext) {
  std::filesystem::create_directories(outdir);
  const std::string name = command + "-" + config_hash(resolved.dump()) + "." + ext;
  return (std::filesystem::path(outdir) / name).string();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cli: cannot write " + path);
  out << body;
  std::cout << "wrote " << path << "\n";
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cli: cannot read " + path);
  json j;
  in >> j;
  return j;
}

InternalModelSpec load_spec(const std::string& path) {
  if (path.empty()) return InternalModelSpec{};  // default: ols
  return InternalModelSpec::from_json(load_json_file(path));
}

ExternalKind resolve_external(const std::string& flag, const Dataset& data) {
  if (flag == "linear") return ExternalKind::linear;
  if (flag == "logistic") return ExternalKind::logistic;
  if (flag == "auto")
    return data.outcome_kind == OutcomeKind::binary ? ExternalKind::logistic
                                                    : ExternalKind::linear;
  throw std::invalid_argument("cli: unknown external kind '" + flag + "'");
}

std::optional<std::vector<int>> class_labels(const Dataset& data) {
  if (data.outcome_kind != OutcomeKind::binary) return std::nullopt;
  std::vector<int> labels(data.y.size());
  for (Eigen::Index i = 0; i < data.y.size(); ++i)
    labels[i] = data.y[i] > 0.5 ? 1 : 0;
  return labels;
}

json report_envelope(const std::string& command, const json& resolved) {
  json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = resolved;
  return j;
}

// concatenate per-report CSVs, keeping only the first header line
std::string merge_csv(const std::vector<std::string>& blocks) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i == 0) {
      out += blocks[i];
    } else {
      const auto nl = blocks[i].find('\n');
      out += blocks[i].substr(nl + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct CommonFlags {
  std::string data;
  std::string spec;
  std::string external = "auto";
  int folds = 10;
  int permutations = 500;
  int repeats = 1;
  std::vector<double> alphas{0.01, 0.05, 0.1};
  std::uint64_t seed = 1;
  std::string intercept = "on";
  int workers = 1;
  std::string outdir = ".";
  std::string format = "text";
};

int run_analyze(const CommonFlags& f) {
  const Dataset data = load_dataset(f.data);
  data.validate();
  const InternalModelSpec spec = load_spec(f.spec);
  spec.validate(data.X.cols());
  const ExternalKind kind = resolve_external(f.external, data);
  const bool intercept = f.intercept == "on";

  const auto folds = make_folds(static_cast<int>(data.y.size()), f.folds,
                                class_labels(data), f.seed);
  const auto pv = prevalidate(data, spec, folds, mix64(f.seed ^ 0x5eedULL));
  const auto fit = fit_external(kind, pv.ytilde, data.Z, data.y, intercept);

  json resolved;
  resolved["data"] = f.data;
  resolved["spec"] = spec.to_json();
  resolved["external"] = to_string(kind);
  resolved["folds"] = f.folds;
  resolved["intercept"] = intercept;
  resolved["seed"] = f.seed;

  json out = report_envelope("analyze", resolved);
  out["external_fit"] = fit.to_json();
  json prov = json::array();
  for (Eigen::Index i = 0; i < pv.ytilde.size(); ++i)
    prov.push_back({{"row", i}, {"fold", pv.folds.fold_of[i]}, {"ytilde", pv.ytilde[i]}});
  out["prevalidated"] = prov;

  if (f.format == "json") {
    write_file(output_path(f.outdir, "analyze", resolved, "json"), out.dump(2) + "\n");
  } else if (f.format == "csv") {
    std::ostringstream csv;
    csv << "row,fold,ytilde\n";
    for (Eigen::Index i = 0; i < pv.ytilde.size(); ++i)
      csv << i << "," << pv.folds.fold_of[i] << "," << pv.ytilde[i] << "\n";
    write_file(output_path(f.outdir, "analyze", resolved, "csv"), csv.str());
  }
  std::cout << "pre-validated predictor over " << f.folds << " folds (seed " << f.seed
            << ")\n\n"
            << fit.to_table() << "\n";
  if (fit.separation)
    std::cout << "warning: separation detected; Wald statistics unreliable\n";
  return 0;
}

int run_permtest(const CommonFlags& f) {
  const Dataset data = load_dataset(f.data);
  data.validate();
  const InternalModelSpec spec = load_spec(f.spec);
  spec.validate(data.X.cols());
  const ExternalKind kind = resolve_external(f.external, data);

  PermutationOptions opts;
  opts.include_intercept = f.intercept == "on";
  opts.workers = f.workers;

  json resolved;
  resolved["data"] = f.data;
  resolved["spec"] = spec.to_json();
  resolved["external"] = to_string(kind);
  resolved["folds"] = f.folds;
  resolved["permutations"] = f.permutations;
  resolved["repeats"] = f.repeats;
  resolved["intercept"] = opts.include_intercept;
  resolved["seed"] = f.seed;
  resolved["workers"] = f.workers;

  // p-values per statistic kind over repeated fold draws
  std::vector<std::vector<double>> pvals(3);
  json runs = json::array();
  for (int r = 0; r < f.repeats; ++r) {
    const auto results = permutation_test_all(data, spec, kind, f.folds,
                                              f.permutations,
                                              mix64(f.seed) + static_cast<std::uint64_t>(r),
                                              opts);
    json run;
    for (int k = 0; k < 3; ++k) {
      if (!results[k].invalid) pvals[k].push_back(results[k].p_value);
      run[to_string(results[k].statistic_kind)] = results[k].to_json();
    }
    runs.push_back(run);
  }

  json out = report_envelope("permtest", resolved);
  json summary;
  std::ostringstream table;
  table << "statistic       runs  mean p   % < 0.01  % < 0.05  % < 0.1\n";
  const StatisticKind kinds[] = {StatisticKind::coefficient, StatisticKind::t_or_z,
                                 StatisticKind::deviance};
  for (int k = 0; k < 3; ++k) {
    const auto& v = pvals[k];
    double mean = 0.0, b01 = 0.0, b05 = 0.0, b10 = 0.0;
    for (double p : v) {
      mean += p;
      b01 += p < 0.01;
      b05 += p < 0.05;
      b10 += p < 0.1;
    }
    const double n = std::max<std::size_t>(v.size(), 1);
    mean /= n;
    b01 /= n;
    b05 /= n;
    b10 /= n;
    const std::string name = to_string(kinds[k]);
    summary[name] = {{"runs", v.size()}, {"mean_p", mean},   {"frac_below_0.01", b01},
                     {"frac_below_0.05", b05}, {"frac_below_0.1", b10}};
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %5zu  %.4f   %7.1f%%  %7.1f%%  %7.1f%%\n",
                  name.c_str(), v.size(), mean, 100 * b01, 100 * b05, 100 * b10);
    table << line;
  }
  out["summary"] = summary;
  out["runs"] = runs;

  if (f.format == "json")
    write_file(output_path(f.outdir, "permtest", resolved, "json"), out.dump(2) + "\n");
  std::cout << table.str();
  return 0;
}

int run_simulate(const std::string& config_path, const CommonFlags& f,
                 bool repeats_set, bool alphas_set, bool seed_set) {
  json cfg = load_json_file(config_path);
  const std::string kind = cfg.value("kind", "type1");
  // flags override the config file
  const int reps = repeats_set ? f.repeats : cfg.value("reps", 1000);
  std::vector<double> alphas = f.alphas;
  if (!alphas_set && cfg.contains("alphas"))
    alphas = cfg["alphas"].get<std::vector<double>>();
  const std::uint64_t seed = seed_set ? f.seed : cfg.value("seed", 1ull);
  const int B = cfg.value("permutations", 200);

  json resolved;
  resolved["kind"] = kind;
  resolved["reps"] = reps;
  resolved["alphas"] = alphas;
  resolved["seed"] = seed;
  resolved["workers"] = f.workers;
  resolved["permutations"] = B;
  resolved["scenarios"] = cfg.contains("scenarios") ? cfg["scenarios"] : json::array();

  std::vector<std::string> csv_blocks;
  json out = report_envelope("simulate", resolved);
  json reports = json::array();

  if (kind == "type1") {
    for (const auto& sj : cfg.at("scenarios")) {
      const auto sc = ScenarioConfig::from_json(sj);
      const auto rep = estimate_type1(sc, alphas, reps, seed, f.workers);
      csv_blocks.push_back(rep.to_csv());
      reports.push_back(rep.to_json());
    }
  } else if (kind == "perm_level") {
    for (const auto& sj : cfg.at("scenarios")) {
      const auto sc = ScenarioConfig::from_json(sj);
      const auto rep = estimate_permutation_level(sc, alphas, reps, B, seed, f.workers);
      csv_blocks.push_back(rep.to_csv());
      reports.push_back(rep.to_json());
    }
  } else if (kind == "power") {
    const auto nullc = ScenarioConfig::from_json(cfg.at("null"));
    const auto altc = ScenarioConfig::from_json(cfg.at("alternative"));
    resolved["null"] = cfg["null"];
    resolved["alternative"] = cfg["alternative"];
    const auto rep = estimate_power(nullc, altc, alphas, reps, B, seed, f.workers);
    csv_blocks.push_back(rep.to_csv());
    reports.push_back(rep.to_json());
  } else if (kind == "bias") {
    for (const auto& sj : cfg.at("scenarios")) {
      const auto sc = ScenarioConfig::from_json(sj);
      const auto rep = coefficient_bias_study(sc, reps, seed, f.workers);
      csv_blocks.push_back(rep.to_csv());
      reports.push_back(rep.to_json());
    }
  } else {
    throw std::invalid_argument("cli: unknown campaign kind '" + kind + "'");
  }
  out["reports"] = reports;

  const std::string csv = merge_csv(csv_blocks);
  if (f.format == "json")
    write_file(output_path(f.outdir, "simulate", resolved, "json"), out.dump(2) + "\n");
  else
    write_file(output_path(f.outdir, "simulate", resolved, "csv"), csv);
  std::cout << csv;
  return 0;
}

int run_asymptotics(const std::string& law, int p, std::vector<double> sigmas,
                    std::size_t draws, int n, int reps, const CommonFlags& f) {
  json resolved;
  resolved["law"] = law;
  resolved["p"] = p;
  resolved["sigmas"] = sigmas;
  resolved["draws"] = draws;
  resolved["n"] = n;
  resolved["reps"] = reps;
  resolved["seed"] = f.seed;
  resolved["workers"] = f.workers;

  LimitLawSample sample;
  if (law == "theorem1") {
    sigmas.clear();
    sample = sample_theorem1(p, draws, f.seed);
  } else if (law == "theorem2") {
    if (sigmas.empty()) throw std::invalid_argument("cli: theorem2 needs --sigmas");
    sample = sample_theorem2(p, sigmas, draws, f.seed);
  } else {
    throw std::invalid_argument("cli: unknown law '" + law + "'");
  }

  int redraws = 0;
  const auto empirical =
      empirical_null_t(n, p, sigmas, reps, mix64(f.seed) + 1, f.workers, &redraws);
  const double ks = ks_distance(empirical, sample.draws);

  json out = report_envelope("asymptotics", resolved);
  out["ks_distance"] = ks;
  out["redraws"] = redraws;

  // QQ-ready export: percentile pairs, empirical pipeline vs limit law
  std::vector<double> emp_sorted = empirical, law_sorted = sample.draws;
  std::sort(emp_sorted.begin(), emp_sorted.end());
  std::sort(law_sorted.begin(), law_sorted.end());
  std::ostringstream csv;
  csv << "quantile,empirical,limit_law\n";
  json qq = json::array();
  for (int q = 1; q < 100; ++q) {
    const double emp = emp_sorted[emp_sorted.size() * q / 100];
    const double lim = law_sorted[law_sorted.size() * q / 100];
    csv << q / 100.0 << "," << emp << "," << lim << "\n";
    qq.push_back({{"q", q / 100.0}, {"empirical", emp}, {"limit_law", lim}});
  }
  out["quantiles"] = qq;

  if (f.format == "json")
    write_file(output_path(f.outdir, "asymptotics", resolved, "json"), out.dump(2) + "\n");
  else if (f.format == "csv")
    write_file(output_path(f.outdir, "asymptotics", resolved, "csv"), csv.str());
  std::printf("KS(empirical n=%d reps=%d, %s p=%d) = %.4f  (leverage redraws: %d)\n", n,
              reps, law.c_str(), p, ks, redraws);
  return 0;
}

int run_cv_error(const std::vector<std::string>& spec_paths, const CommonFlags& f) {
  const Dataset data = load_dataset(f.data);
  data.validate();

  json resolved;
  resolved["data"] = f.data;
  resolved["specs"] = spec_paths;
  resolved["folds"] = f.folds;
  resolved["repeats"] = f.repeats;
  resolved["seed"] = f.seed;

  json out = report_envelope("cv-error", resolved);
  json rows = json::array();
  std::printf("%-40s %s\n", "spec", "cv error");
  std::vector<std::string> paths = spec_paths;
  if (paths.empty()) paths.push_back("");  // default ols
  for (const auto& path : paths) {
    const InternalModelSpec spec = load_spec(path);
    spec.validate(data.X.cols());
    const double err = cv_error(data, spec, f.folds, f.repeats, f.seed);
    const std::string label = path.empty() ? "(default ols)" : path;
    std::printf("%-40s %.4f\n", label.c_str(), err);
    rows.push_back({{"spec", spec.to_json()}, {"error", err}});
  }
  out["errors"] = rows;
  if (f.format == "json")
    write_file(output_path(f.outdir, "cv-error", resolved, "json"), out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pre-validation statistics toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonFlags f;
  std::string config_path;
  std::string law = "theorem1";
  int asym_p = 5;
  std::vector<double> sigmas;
  std::size_t draws = 100000;
  int asym_n = 2000;
  int asym_reps = 2000;
  std::vector<std::string> spec_paths;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    if (needs_data) cmd->add_option("--data", f.data, "dataset CSV")->required();
    cmd->add_option("--folds", f.folds, "fold count K (1 = re-use method)");
    cmd->add_option("--seed", f.seed, "64-bit seed");
    cmd->add_option("--intercept", f.intercept, "external intercept: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--workers", f.workers, "worker thread count");
    cmd->add_option("--out", f.outdir, "output directory");
    cmd->add_option("--format", f.format, "text|csv|json")
        ->check(CLI::IsMember({"text", "csv", "json"}));
  };

  auto* analyze = app.add_subcommand("analyze", "pre-validate and fit the external model");
  add_common(analyze, true);
  analyze->add_option("--spec", f.spec, "internal model spec JSON");
  analyze->add_option("--external", f.external, "linear|logistic|auto");

  auto* permtest = app.add_subcommand("permtest", "permutation test of the PV coefficient");
  add_common(permtest, true);
  permtest->add_option("--spec", f.spec, "internal model spec JSON");
  permtest->add_option("--external", f.external, "linear|logistic|auto");
  permtest->add_option("--permutations", f.permutations, "permutation count B");
  permtest->add_option("--repeats", f.repeats, "repeated fold draws");

  auto* simulate = app.add_subcommand("simulate", "run a simulation campaign");
  add_common(simulate, false);
  simulate->add_option("--config", config_path, "campaign config JSON")->required();
  auto* reps_opt = simulate->add_option("--repeats", f.repeats, "override replicate count");
  auto* alpha_opt = simulate->add_option("--alpha", f.alphas, "override alpha levels");

  auto* asym = app.add_subcommand("asymptotics", "compare the pipeline to its limit law");
  add_common(asym, false);
  asym->add_option("--law", law, "theorem1|theorem2");
  asym->add_option("--p", asym_p, "internal predictor count");
  asym->add_option("--sigmas", sigmas, "external noise SDs (theorem2)");
  asym->add_option("--draws", draws, "limit-law sample size");
  asym->add_option("--n", asym_n, "pipeline sample size");
  asym->add_option("--reps", asym_reps, "pipeline replicate count");

  auto* cverr = app.add_subcommand("cv-error", "cross-validated error of internal specs");
  add_common(cverr, true);
  cverr->add_option("--spec", spec_paths, "internal model spec JSON (repeatable)");
  cverr->add_option("--repeats", f.repeats, "fold redraws to average over");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(analyze)) return run_analyze(f);
    if (app.got_subcommand(permtest)) return run_permtest(f);
    if (app.got_subcommand(simulate))
      return run_simulate(config_path, f, reps_opt->count() > 0, alpha_opt->count() > 0,
                          simulate->get_option("--seed")->count() > 0);
    if (app.got_subcommand(asym))
      return run_asymptotics(law, asym_p, sigmas, draws, asym_n, asym_reps, f);
    if (app.got_subcommand(cverr)) return run_cv_error(spec_paths, f);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
