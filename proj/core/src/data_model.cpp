#include "prevalid/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "prevalid/rng.hpp"

namespace prevalid {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

bool is_binary_value(double v) { return v == 0.0 || v == 1.0; }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& col) {
  const std::string s = trim(raw);
  if (s.empty())
    fail("blank cell at row " + std::to_string(row) + ", column " + col);
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    fail("non-numeric cell '" + s + "' at row " + std::to_string(row) +
         ", column " + col);
  if (!std::isfinite(v))
    fail("non-finite value at row " + std::to_string(row) + ", column " + col);
  return v;
}

}  // namespace

void Dataset::validate() const {
  const Eigen::Index rows = n();
  if (rows < 2) fail("dataset needs at least 2 rows, got " + std::to_string(rows));
  if (X.rows() != rows)
    fail("X has " + std::to_string(X.rows()) + " rows but y has " + std::to_string(rows));
  if (Z.cols() > 0 && Z.rows() != rows)
    fail("Z has " + std::to_string(Z.rows()) + " rows but y has " + std::to_string(rows));
  if (!y.allFinite() || !X.allFinite() || (Z.size() > 0 && !Z.allFinite()))
    fail("dataset contains non-finite entries");
  if (outcome_kind == OutcomeKind::binary) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!is_binary_value(y[i]))
        fail("binary outcome has value " + std::to_string(y[i]) + " at row " +
             std::to_string(i));
    }
  }
}

std::vector<std::vector<int>> FoldAssignment::groups() const {
  std::vector<std::vector<int>> g(num_folds);
  for (std::size_t i = 0; i < fold_of.size(); ++i) g[fold_of[i]].push_back(static_cast<int>(i));
  return g;
}

void FoldAssignment::validate() const {
  if (num_folds < 2) fail("fold count must be >= 2");
  std::vector<int> sizes(num_folds, 0);
  for (int f : fold_of) {
    if (f < 0 || f >= num_folds) fail("fold index out of range");
    ++sizes[f];
  }
  const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
  if (*mn == 0) fail("empty fold");
  if (*mx - *mn > 1) fail("fold sizes differ by more than 1");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open dataset file: " + path);

  std::string header;
  if (!std::getline(in, header)) fail("empty file: " + path);
  const auto names = split_csv_line(header);

  int y_col = -1;
  std::vector<int> x_cols, z_cols;
  std::vector<std::string> col_names(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::string name = trim(names[c]);
    col_names[c] = name;
    if (name == "y") {
      if (y_col >= 0) fail("duplicate y column");
      y_col = static_cast<int>(c);
    } else if (name.rfind("x_", 0) == 0) {
      x_cols.push_back(static_cast<int>(c));
    } else if (name.rfind("z_", 0) == 0) {
      z_cols.push_back(static_cast<int>(c));
    } else {
      fail("unrecognized column '" + name + "'; expected y, x_* or z_*");
    }
  }
  if (y_col < 0) fail("missing y column in " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != names.size())
      fail("ragged row " + std::to_string(lineno) + ": expected " +
           std::to_string(names.size()) + " cells, got " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = parse_cell(cells[c], lineno, col_names[c]);
    rows.push_back(std::move(row));
  }

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  Dataset d;
  d.y.resize(n);
  d.X.resize(n, static_cast<Eigen::Index>(x_cols.size()));
  d.Z.resize(n, static_cast<Eigen::Index>(z_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    d.y[i] = rows[i][y_col];
    for (std::size_t j = 0; j < x_cols.size(); ++j) d.X(i, j) = rows[i][x_cols[j]];
    for (std::size_t k = 0; k < z_cols.size(); ++k) d.Z(i, k) = rows[i][z_cols[k]];
  }

  bool binary = n > 0;
  for (Eigen::Index i = 0; i < n && binary; ++i) binary = is_binary_value(d.y[i]);
  d.outcome_kind = binary ? OutcomeKind::binary : OutcomeKind::continuous;
  d.validate();
  return d;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write dataset file: " + path);
  out << "y";
  for (Eigen::Index k = 0; k < data.e(); ++k) out << ",z_" << (k + 1);
  for (Eigen::Index j = 0; j < data.p(); ++j) out << ",x_" << (j + 1);
  out << "\n";
  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    emit(data.y[i]);
    for (Eigen::Index k = 0; k < data.e(); ++k) {
      out << ",";
      emit(data.Z(i, k));
    }
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      out << ",";
      emit(data.X(i, j));
    }
    out << "\n";
  }
}

FoldAssignment make_folds(int n, int num_folds,
                          const std::optional<std::vector<int>>& stratify_labels,
                          std::uint64_t seed) {
  if (num_folds < 2) fail("fold count must be >= 2, got " + std::to_string(num_folds));
  if (num_folds > n) fail("fold count " + std::to_string(num_folds) +
                          " exceeds observation count " + std::to_string(n));

  FoldAssignment fa;
  fa.num_folds = num_folds;
  fa.fold_of.assign(n, -1);
  Rng rng = Rng::substream(seed, 0xf01d);

  if (!stratify_labels) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    // contiguous chunks; the first n % K folds get the extra member
    const int base = n / num_folds, extra = n % num_folds;
    int pos = 0;
    for (int f = 0; f < num_folds; ++f) {
      const int size = base + (f < extra ? 1 : 0);
      for (int s = 0; s < size; ++s) fa.fold_of[order[pos++]] = f;
    }
    fa.validate();
    return fa;
  }

  const auto& labels = *stratify_labels;
  if (static_cast<int>(labels.size()) != n) fail("stratify label length mismatch");
  std::set<int> classes(labels.begin(), labels.end());
  for (int cls : classes) {
    const int count = static_cast<int>(std::count(labels.begin(), labels.end(), cls));
    if (count < 1) fail("empty stratification class");
  }

  std::vector<int> load(num_folds, 0);
  for (int cls : classes) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (labels[i] == cls) members.push_back(i);
    rng.shuffle(members);
    // deal to folds ordered by (current load, fold id); each full pass of K
    // assignments adds one member to every fold
    std::vector<int> fold_order(num_folds);
    std::iota(fold_order.begin(), fold_order.end(), 0);
    std::stable_sort(fold_order.begin(), fold_order.end(),
                     [&](int a, int b) { return load[a] < load[b]; });
    for (std::size_t m = 0; m < members.size(); ++m) {
      const int f = fold_order[m % num_folds];
      fa.fold_of[members[m]] = f;
      ++load[f];
    }
  }
  fa.validate();
  return fa;
}

}  // namespace prevalid
