#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ang/data.hpp"
#include "ang/net.hpp"
#include "ang/optim.hpp"

namespace ang {

struct RunConfig {
  OptimizerConfig opt;
  std::vector<int> hidden_dims = {64, 64};
  int epochs = 20;
  int batch_size = 64;
  unsigned seed = 1;

  // dataset: "blobs" or a CSV path
  std::string dataset = "blobs";
  int label_column = -1;
  double split_fraction = 0.8;
  int blob_classes = 3;
  int blob_dim = 20;
  int blob_per_class = 500;
  double blob_spread = 1.0;

  // injected clock for timing tests; defaults to steady_clock seconds
  std::function<double()> clock;
};

struct MetricsRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;       // NaN when validation split is empty
  double val_accuracy = 0.0;   // NaN likewise
  double epoch_wall_seconds = 0.0;
  double mean_inversion_step_seconds = 0.0;
  double lambda_blend_value = 0.0;
  bool failed = false;  // run aborted mid-epoch on numerical failure
};

struct RunResult {
  std::vector<MetricsRecord> records;  // epochs + 1, index 0 = initial eval
  Network final_net;
};

Dataset load_dataset(const RunConfig& cfg);

/// Full training run per the config: epochs x minibatch steps through the
/// configured driver, with per-epoch metrics and step timing. Inversion-step
/// timing covers only optimizer steps that recompute inverses; data loading
/// and evaluation are excluded.
RunResult run_training(const RunConfig& cfg);
RunResult run_training(const RunConfig& cfg, const Dataset& ds);

/// CSV ("csv") or JSON array ("json") with full double precision.
void emit_metrics(const std::vector<MetricsRecord>& records,
                  const std::string& path, const std::string& format = "csv");

std::vector<MetricsRecord> parse_metrics_csv(const std::string& path);

/// Serialize to the CSV text without touching the filesystem; the timing
/// columns can be suppressed for byte-comparison of deterministic reruns.
std::string metrics_to_csv(const std::vector<MetricsRecord>& records,
                           bool include_timing = true);

/// Table of per-optimizer mean per-inversion-step and per-epoch times with
/// percentage gaps relative to the "kfac" entry, as CSV text.
std::string timing_report(
    const std::map<std::string, std::vector<MetricsRecord>>& runs);

}  // namespace ang
