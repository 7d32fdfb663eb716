#include "ang/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace ang {

Matrix Dataset::features(const std::vector<int>& idx) const {
  Matrix out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = X.row(idx[i]);
  return out;
}

Eigen::VectorXi Dataset::labels(const std::vector<int>& idx) const {
  Eigen::VectorXi out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = y(idx[i]);
  return out;
}

namespace {

void split_and_standardize(Dataset& ds, double split_fraction, unsigned seed) {
  const int n = static_cast<int>(ds.X.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const int n_train = static_cast<int>(std::lround(split_fraction * n));
  ds.train_idx.assign(order.begin(), order.begin() + n_train);
  ds.val_idx.assign(order.begin() + n_train, order.end());

  if (ds.train_idx.empty())
    throw std::invalid_argument("dataset: empty train split");
  std::set<int> train_classes;
  for (int i : ds.train_idx) train_classes.insert(ds.y(i));
  if (static_cast<int>(train_classes.size()) < 2)
    throw std::invalid_argument("invalid-dataset: fewer than two classes in train split");

  // per-column standardization with train statistics
  Matrix train = ds.features(ds.train_idx);
  Vector mean = train.colwise().mean();
  Vector var = ((train.rowwise() - mean.transpose()).array().square())
                   .colwise().mean();
  Vector sd = var.array().sqrt().max(1e-12);
  ds.X = (ds.X.rowwise() - mean.transpose()).array().rowwise() /
         sd.transpose().array();
}

}  // namespace

Dataset load_csv_dataset(const std::string& path, int label_column,
                         double split_fraction, unsigned seed) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
        // trailing garbage after the number is a parse failure
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        if (lineno == 1 && rows.empty()) { row.clear(); break; }  // header row
        throw FormatError("parse failure at line " + std::to_string(lineno) +
                          " of " + path);
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("inconsistent column count at line " +
                        std::to_string(lineno) + " of " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty dataset file: " + path);

  const int cols = static_cast<int>(rows.front().size());
  if (label_column < 0) label_column += cols;
  if (label_column < 0 || label_column >= cols)
    throw std::invalid_argument("load_csv_dataset: label column out of range");

  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), cols - 1);
  ds.y.resize(static_cast<Eigen::Index>(rows.size()));
  int max_label = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double lab = rows[i][label_column];
    if (lab != std::floor(lab) || lab < 0)
      throw FormatError("non-integer label at line " + std::to_string(i + 1));
    ds.y(static_cast<Eigen::Index>(i)) = static_cast<int>(lab);
    max_label = std::max(max_label, static_cast<int>(lab));
    int c = 0;
    for (int j = 0; j < cols; ++j)
      if (j != label_column) ds.X(static_cast<Eigen::Index>(i), c++) = rows[i][j];
  }
  ds.num_classes = max_label + 1;
  split_and_standardize(ds, split_fraction, seed);
  return ds;
}

Dataset synth_blobs(int classes, int dim, int per_class, double spread,
                    unsigned seed, double split_fraction) {
  if (classes < 2) throw std::invalid_argument("synth_blobs: need >= 2 classes");
  if (dim < 1) throw std::invalid_argument("synth_blobs: dim < 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix centers(classes, dim);
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = 0; j < centers.cols(); ++j)
      centers(i, j) = 3.0 * gauss(rng);

  const int n = classes * per_class;
  Dataset ds;
  ds.X.resize(n, dim);
  ds.y.resize(n);
  ds.num_classes = classes;
  int row = 0;
  for (int c = 0; c < classes; ++c)
    for (int k = 0; k < per_class; ++k, ++row) {
      for (int j = 0; j < dim; ++j)
        ds.X(row, j) = centers(c, j) + spread * gauss(rng);
      ds.y(row) = c;
    }
  split_and_standardize(ds, split_fraction, seed + 1);
  return ds;
}

}  // namespace ang
