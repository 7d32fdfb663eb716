#pragma once

#include <string>
#include <vector>

#include "ang/linalg.hpp"

namespace ang {

struct Dataset {
  Matrix X;            // N x d, standardized on the train split
  Eigen::VectorXi y;   // class ids in [0, C)
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  int num_classes = 0;

  Matrix features(const std::vector<int>& idx) const;
  Eigen::VectorXi labels(const std::vector<int>& idx) const;
};

/// Thrown on malformed dataset files, with the offending line number.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// CSV with numeric feature columns and one integer label column
/// (label_column < 0 counts from the end). Rows are shuffled by seed,
/// the first split_fraction go to train, and features are standardized
/// per column with train-split statistics.
Dataset load_csv_dataset(const std::string& path, int label_column,
                         double split_fraction, unsigned seed);

/// Gaussian clusters around seeded random centers; deterministic by seed.
Dataset synth_blobs(int classes, int dim, int per_class, double spread,
                    unsigned seed, double split_fraction = 0.8);

}  // namespace ang
