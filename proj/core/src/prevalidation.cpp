#include "prevalid/prevalidation.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "prevalid/rng.hpp"

namespace prevalid {

namespace {

void extract_training(const Dataset& data, const std::vector<int>& held_out,
                      Eigen::MatrixXd& X_train, Eigen::VectorXd& y_train) {
  const Eigen::Index n = data.n();
  std::vector<bool> held(n, false);
  for (int i : held_out) held[i] = true;
  const Eigen::Index n_train = n - static_cast<Eigen::Index>(held_out.size());
  X_train.resize(n_train, data.p());
  y_train.resize(n_train);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (held[i]) continue;
    X_train.row(r) = data.X.row(i);
    y_train[r] = data.y[i];
    ++r;
  }
}

}  // namespace

PrevalidatedPredictor prevalidate(const Dataset& data, const InternalModelSpec& spec,
                                  const FoldAssignment& folds, std::uint64_t seed) {
  data.validate();
  folds.validate();
  spec.validate(data.p());
  if (static_cast<Eigen::Index>(folds.fold_of.size()) != data.n())
    throw std::invalid_argument("prevalidate: fold assignment length mismatch");
  if (spec.is_classifier() && data.outcome_kind != OutcomeKind::binary)
    throw std::invalid_argument("prevalidate: classifier spec needs a binary outcome");

  PrevalidatedPredictor pv;
  pv.ytilde.resize(data.n());
  pv.folds = folds;
  pv.spec = spec;

  const auto groups = folds.groups();
  for (int k = 0; k < folds.num_folds; ++k) {
    Eigen::MatrixXd X_train;
    Eigen::VectorXd y_train;
    extract_training(data, groups[k], X_train, y_train);

    FittedInternalModel model;
    try {
      // each fold consumes its own substream so folds could run concurrently
      model = fit_internal(X_train, y_train, spec,
                           Rng::substream(seed, static_cast<std::uint64_t>(k)).next_u64());
    } catch (const std::exception& ex) {
      throw std::runtime_error("prevalidate: internal fit failed on fold " +
                               std::to_string(k) + ": " + ex.what());
    }

    Eigen::MatrixXd X_test(static_cast<Eigen::Index>(groups[k].size()), data.p());
    for (std::size_t r = 0; r < groups[k].size(); ++r)
      X_test.row(static_cast<Eigen::Index>(r)) = data.X.row(groups[k][r]);
    const Eigen::VectorXd pred = predict(model, X_test);
    for (std::size_t r = 0; r < groups[k].size(); ++r)
      pv.ytilde[groups[k][r]] = pred[static_cast<Eigen::Index>(r)];

    FoldFitInfo info;
    info.fold = k;
    info.selected_features = model.selected;
    info.ridge_applied = model.ridge_applied;
    info.cutoff_degenerate = model.cutoff_degenerate;
    info.plr_winner = model.plr_winner;
    pv.fold_fits.push_back(std::move(info));
  }
  return pv;
}

Eigen::VectorXd hat_diagonal(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (p >= n) throw std::invalid_argument("hat_diagonal: requires p < n");
  const Eigen::MatrixXd XtX = X.transpose() * X;
  Eigen::LLT<Eigen::MatrixXd> llt(XtX);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("hat_diagonal: X^T X not invertible");
  const Eigen::MatrixXd XtX_inv_Xt = llt.solve(X.transpose());  // p x n
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = X.row(i) * XtX_inv_Xt.col(i);
  return d;
}

Eigen::VectorXd loo_linear_prevalidate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd XtX = X.transpose() * X;
  Eigen::LLT<Eigen::MatrixXd> llt(XtX);
  if (X.cols() >= n || llt.info() != Eigen::Success)
    throw std::invalid_argument("loo_linear_prevalidate: requires p < n and invertible X^T X");

  const Eigen::VectorXd hy = X * llt.solve(X.transpose() * y);  // H y
  const Eigen::VectorXd d = hat_diagonal(X);
  Eigen::VectorXd ytilde(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d[i] >= 1.0 - 1e-12)
      throw std::runtime_error("loo_linear_prevalidate: leverage-one row " + std::to_string(i));
    ytilde[i] = (hy[i] - d[i] * y[i]) / (1.0 - d[i]);
  }
  return ytilde;
}

double cv_error(const Dataset& data, const InternalModelSpec& spec, int num_folds,
                int reps, std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("cv_error: reps must be >= 1");
  const bool classify = data.outcome_kind == OutcomeKind::binary;
  std::optional<std::vector<int>> labels;
  if (classify) {
    std::vector<int> lab(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) lab[i] = static_cast<int>(data.y[i]);
    labels = std::move(lab);
  }

  double total = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto folds = make_folds(static_cast<int>(data.n()), num_folds, labels,
                                  Rng::substream(seed, rep, 0xcf01d).next_u64());
    const auto pv = prevalidate(data, spec, folds,
                                Rng::substream(seed, rep, 0xf17).next_u64());
    double err = 0.0;
    if (classify) {
      for (Eigen::Index i = 0; i < data.n(); ++i)
        if ((pv.ytilde[i] > 0.5 ? 1.0 : 0.0) != data.y[i]) err += 1.0;
    } else {
      err = (pv.ytilde - data.y).squaredNorm();
    }
    total += err / static_cast<double>(data.n());
  }
  return total / static_cast<double>(reps);
}

void PrevalidatedPredictor::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write: " + path);
  out << "row,fold,ytilde\n";
  char buf[64];
  for (Eigen::Index i = 0; i < ytilde.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%ld,%d,%.17g\n", static_cast<long>(i),
                  folds.fold_of[static_cast<std::size_t>(i)], ytilde[i]);
    out << buf;
  }
}

}  // namespace prevalid
