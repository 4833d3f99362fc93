#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "prevalid/data_model.hpp"
#include "prevalid/internal_models.hpp"

namespace prevalid {

struct FoldFitInfo {
  int fold = 0;
  std::vector<int> selected_features;
  bool ridge_applied = false;
  bool cutoff_degenerate = false;
  int plr_winner = 0;
};

// The pre-validated predictor: ytilde[i] comes from a model fit with fold(i)
// held out; fold provenance is retained for auditing.
struct PrevalidatedPredictor {
  Eigen::VectorXd ytilde;
  FoldAssignment folds;
  InternalModelSpec spec;
  std::vector<FoldFitInfo> fold_fits;

  // columns: row index, fold, ytilde
  void write_csv(const std::string& path) const;
};

// K-fold pre-validation: for each fold, fit the spec on the other folds and
// predict the held-out rows. Deterministic given the fold assignment and seed.
PrevalidatedPredictor prevalidate(const Dataset& data, const InternalModelSpec& spec,
                                  const FoldAssignment& folds, std::uint64_t seed);

// Closed-form leave-one-out pre-validation for the linear internal model:
// (I - D)^{-1} (H - D) y with H = X (X^T X)^{-1} X^T and D = diag(H).
// Throws when some leverage d_ii >= 1 - 1e-12.
Eigen::VectorXd loo_linear_prevalidate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// diagonal of the hat matrix
Eigen::VectorXd hat_diagonal(const Eigen::MatrixXd& X);

// Mean error of the pre-validated prediction against y over `reps` random
// fold draws: misclassification rate for binary outcomes, MSE otherwise.
double cv_error(const Dataset& data, const InternalModelSpec& spec, int num_folds,
                int reps, std::uint64_t seed);

}  // namespace prevalid
