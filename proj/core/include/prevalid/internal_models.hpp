#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace prevalid {

enum class ModelKind { ols, lasso_l, lda_top_g, corr_centroid, plr_cv };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Prediction-rule specification fit inside each training fold.
struct InternalModelSpec {
  ModelKind kind = ModelKind::ols;

  int l = 0;        // lasso_l: target nonzero count
  int g = 0;        // lda_top_g: selected feature count
  int m_genes = 0;  // corr_centroid: selected gene count
  int allowed_misclass = 0;          // corr_centroid: tolerated poor-class errors
  std::vector<int> sparsity_grid;    // plr_cv
  int inner_folds = 0;               // plr_cv
  bool discriminant_score = false;   // lda_top_g: emit the score, not the indicator
  bool center = false;               // ols/lasso_l: center X and y, fit an intercept

  bool is_classifier() const {
    return kind == ModelKind::lda_top_g || kind == ModelKind::corr_centroid ||
           kind == ModelKind::plr_cv;
  }
  void validate(Eigen::Index p) const;

  nlohmann::json to_json() const;
  static InternalModelSpec from_json(const nlohmann::json& j);
};

// Fitted rule. Prediction depends only on the stored parameters; no view of
// the training data is retained.
struct FittedInternalModel {
  ModelKind kind = ModelKind::ols;
  Eigen::Index p = 0;  // training column count

  // ols / lasso_l / plr_cv: dense coefficient vector (length p) + intercept
  Eigen::VectorXd coef;
  double intercept = 0.0;

  std::vector<int> selected;  // indices of selected features (ascending)

  // lda_top_g: indicator = 1 iff lda_weights . x[selected] + lda_offset > 0
  Eigen::VectorXd lda_weights;
  double lda_offset = 0.0;
  bool discriminant_score = false;

  // corr_centroid: class-1 ("good") centroid over standardized selected genes
  Eigen::VectorXd centroid;
  double cutoff = 0.0;

  // standardization applied by classifier fits (selected columns)
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;

  // fit metadata
  bool ridge_applied = false;
  bool cutoff_degenerate = false;
  int plr_winner = 0;         // plr_cv: winning sparsity
  double plr_inner_error = 0.0;
};

FittedInternalModel fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// LARS forward-entry path (no intercept, columns scale-normalized for entry
// comparisons), stopped at the breakpoint where the active set has exactly l
// members. Ties enter lowest column index first. l == p gives the OLS fit.
FittedInternalModel fit_lasso_l(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int l);

FittedInternalModel fit_lda_top_g(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  int g, bool discriminant_score = false);

FittedInternalModel fit_corr_centroid(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      int m_genes, int allowed_misclass);

FittedInternalModel fit_plr_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const std::vector<int>& sparsity_grid, int inner_folds,
                               std::uint64_t seed);

FittedInternalModel fit_internal(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const InternalModelSpec& spec, std::uint64_t seed);

// Continuous predictions for regression kinds, {0,1} indicators for
// classifier kinds (lda in score mode emits the discriminant value).
Eigen::VectorXd predict(const FittedInternalModel& model, const Eigen::MatrixXd& X_new);

// Pearson correlation of each column of X with y; columns with zero variance
// get correlation 0.
Eigen::VectorXd column_correlations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// indices of the g columns with largest |correlation|, ascending index order
std::vector<int> top_correlated(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int g);

}  // namespace prevalid
