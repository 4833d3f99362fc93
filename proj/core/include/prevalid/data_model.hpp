#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace prevalid {

enum class OutcomeKind { continuous, binary };

// Response y, internal feature matrix X (n x p) and external predictors
// Z (n x e, e may be 0). Immutable by convention after validate().
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Z;
  OutcomeKind outcome_kind = OutcomeKind::continuous;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }
  Eigen::Index e() const { return Z.cols(); }

  // Throws std::invalid_argument on shape mismatch, non-finite entries or
  // a binary outcome with values outside {0, 1}.
  void validate() const;
};

struct FoldAssignment {
  std::vector<int> fold_of;  // fold index in [0, num_folds) per observation
  int num_folds = 0;

  // observation indices per fold, ascending within each fold
  std::vector<std::vector<int>> groups() const;
  void validate() const;
};

// CSV with a header row: one `y` column, then `z_1..z_e` and `x_1..x_p`
// columns in any order; column order within each prefix is preserved.
// The outcome is classified as binary iff every y value is 0 or 1.
Dataset load_dataset(const std::string& path);

// Writes the canonical column layout y, z_*, x_* with round-trip-exact
// formatting (%.17g).
void save_dataset(const Dataset& data, const std::string& path);

// Seeded uniform shuffle followed by contiguous chunking; fold sizes differ
// by at most one. With stratify_labels (binary), each label is dealt to the
// currently least-loaded folds so per-fold class counts stay within one of
// proportional. num_folds == n gives leave-one-out.
FoldAssignment make_folds(int n, int num_folds,
                          const std::optional<std::vector<int>>& stratify_labels,
                          std::uint64_t seed);

}  // namespace prevalid
