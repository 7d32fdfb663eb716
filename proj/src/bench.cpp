#include "ang/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace ang {

namespace {

double steady_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double effective_lr(const OptimizerConfig& opt, int epoch) {
  double eta = opt.learning_rate;
  for (const auto& [at, mult] : opt.milestones)
    if (epoch >= at) eta *= mult;
  return eta;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.dataset == "blobs")
    return synth_blobs(cfg.blob_classes, cfg.blob_dim, cfg.blob_per_class,
                       cfg.blob_spread, cfg.seed, cfg.split_fraction);
  return load_csv_dataset(cfg.dataset, cfg.label_column, cfg.split_fraction,
                          cfg.seed);
}

RunResult run_training(const RunConfig& cfg) {
  return run_training(cfg, load_dataset(cfg));
}

RunResult run_training(const RunConfig& cfg, const Dataset& ds) {
  auto clock = cfg.clock ? cfg.clock : steady_seconds;

  OptimizerConfig opt = cfg.opt;
  if (opt.milestones.empty() && cfg.epochs >= 2)
    opt.milestones = {{cfg.epochs / 2, 0.1}, {cfg.epochs * 3 / 4, 0.1}};
  if (opt.kind == OptimizerKind::TruncatedKfac && opt.switch_epoch < 0)
    opt.switch_epoch = static_cast<int>(std::lround(0.6 * cfg.epochs));

  std::vector<int> dims;
  dims.push_back(static_cast<int>(ds.X.cols()));
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(ds.num_classes);
  Network net = make_mlp(dims, Activation::ReLU, Loss::SoftmaxCrossEntropy,
                         cfg.seed);

  const Matrix train_X = ds.features(ds.train_idx);
  const Eigen::VectorXi train_y = ds.labels(ds.train_idx);
  const Matrix val_X = ds.features(ds.val_idx);
  const Eigen::VectorXi val_y = ds.labels(ds.val_idx);
  const int n_train = static_cast<int>(ds.train_idx.size());
  const int steps_per_epoch =
      std::max(1, (n_train + cfg.batch_size - 1) / cfg.batch_size);
  const long total_steps = static_cast<long>(steps_per_epoch) * cfg.epochs;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto evaluate = [&](MetricsRecord& rec) {
    EvalResult tr = loss_eval(net, train_X, train_y);
    rec.train_loss = tr.loss;
    rec.train_accuracy = tr.accuracy;
    if (val_X.rows() > 0) {
      EvalResult va = loss_eval(net, val_X, val_y);
      rec.val_loss = va.loss;
      rec.val_accuracy = va.accuracy;
    } else {
      rec.val_loss = nan;
      rec.val_accuracy = nan;
    }
  };

  RunResult result;
  MetricsRecord initial;
  initial.epoch = 0;
  evaluate(initial);
  result.records.push_back(initial);

  std::mt19937_64 batch_rng(cfg.seed + 17);
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  OptimizerState state;
  long step_index = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), batch_rng);
    const double eta = effective_lr(opt, epoch - 1);

    MetricsRecord rec;
    rec.epoch = epoch;
    double epoch_time = 0.0;
    double inv_time = 0.0, all_time = 0.0;
    long inv_count = 0, all_count = 0;
    double last_lambda = 0.0;
    bool aborted = false;

    for (int s = 0; s < steps_per_epoch; ++s) {
      const int lo = s * cfg.batch_size;
      const int hi = std::min(lo + cfg.batch_size, n_train);
      if (lo >= hi) break;
      Matrix Xb(hi - lo, train_X.cols());
      Eigen::VectorXi yb(hi - lo);
      for (int i = lo; i < hi; ++i) {
        Xb.row(i - lo) = train_X.row(order[i]);
        yb(i - lo) = train_y(order[i]);
      }

      const double t0 = clock();
      try {
        std::vector<LayerTape> tapes;
        Matrix logits = forward(net, Xb, &tapes);
        Targets targets;
        targets.labels = yb;
        std::vector<Matrix> grads = backward(net, logits, tapes, targets);
        StepContext ctx{eta, step_index, total_steps, epoch - 1};
        auto bs = optimizer_step(net, tapes, grads, opt, state, ctx);
        if (bs) last_lambda = bs->lambda_blend;
      } catch (const NumericalError&) {
        rec.failed = true;
        aborted = true;
      }
      const double t1 = clock();
      epoch_time += t1 - t0;
      all_time += t1 - t0;
      ++all_count;
      if (!aborted && state.inverted_this_step) {
        inv_time += t1 - t0;
        ++inv_count;
      }
      ++step_index;
      if (aborted) break;
    }

    rec.epoch_wall_seconds = epoch_time;
    rec.mean_inversion_step_seconds =
        inv_count > 0 ? inv_time / inv_count
                      : (all_count > 0 ? all_time / all_count : 0.0);
    rec.lambda_blend_value = last_lambda;
    evaluate(rec);
    // a diverged run (overflowed weights) is reported, not propagated
    if (!std::isfinite(rec.train_loss)) rec.failed = true;
    result.records.push_back(rec);
    if (rec.failed) break;
  }

  result.final_net = std::move(net);
  return result;
}

std::string metrics_to_csv(const std::vector<MetricsRecord>& records,
                           bool include_timing) {
  std::ostringstream out;
  out << "epoch,train_loss,train_acc,val_loss,val_acc";
  if (include_timing) out << ",epoch_time_s,inv_step_time_s";
  out << ",lambda\n";
  for (const MetricsRecord& r : records) {
    out << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.train_accuracy)
        << ',' << fmt(r.val_loss) << ',' << fmt(r.val_accuracy);
    if (include_timing)
      out << ',' << fmt(r.epoch_wall_seconds) << ','
          << fmt(r.mean_inversion_step_seconds);
    out << ',' << fmt(r.lambda_blend_value);
    if (r.failed) out << ",FAILED";
    out << '\n';
  }
  return out.str();
}

void emit_metrics(const std::vector<MetricsRecord>& records,
                  const std::string& path, const std::string& format) {
  if (records.empty())
    throw std::invalid_argument("emit_metrics: no records");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io-error: cannot write " + path);
  if (format == "csv") {
    out << metrics_to_csv(records);
  } else if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    auto num = [](double v) {
      return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
    };
    for (const MetricsRecord& r : records) {
      arr.push_back({{"epoch", r.epoch},
                     {"train_loss", r.train_loss},
                     {"train_acc", r.train_accuracy},
                     {"val_loss", num(r.val_loss)},
                     {"val_acc", num(r.val_accuracy)},
                     {"epoch_time_s", r.epoch_wall_seconds},
                     {"inv_step_time_s", r.mean_inversion_step_seconds},
                     {"lambda", r.lambda_blend_value},
                     {"failed", r.failed}});
    }
    out << arr.dump(2) << '\n';
  } else {
    throw std::invalid_argument("emit_metrics: unknown format " + format);
  }
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io-error: cannot read " + path);
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("empty metrics file: " + path);
  std::vector<MetricsRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 8)
      throw FormatError("bad metrics row: " + line);
    MetricsRecord r;
    r.epoch = std::stoi(cells[0]);
    r.train_loss = std::stod(cells[1]);
    r.train_accuracy = std::stod(cells[2]);
    r.val_loss = std::stod(cells[3]);
    r.val_accuracy = std::stod(cells[4]);
    r.epoch_wall_seconds = std::stod(cells[5]);
    r.mean_inversion_step_seconds = std::stod(cells[6]);
    r.lambda_blend_value = std::stod(cells[7]);
    r.failed = cells.size() > 8 && cells[8] == "FAILED";
    records.push_back(r);
  }
  return records;
}

std::string timing_report(
    const std::map<std::string, std::vector<MetricsRecord>>& runs) {
  if (runs.size() < 2)
    throw std::invalid_argument("timing_report: need at least two optimizers");
  auto it = runs.find("kfac");
  if (it == runs.end())
    throw std::invalid_argument("timing_report: missing kfac baseline");

  auto means = [](const std::vector<MetricsRecord>& recs) {
    double inv = 0.0, ep = 0.0;
    long n = 0;
    for (const MetricsRecord& r : recs) {
      if (r.epoch == 0) continue;  // initial evaluation carries no timing
      inv += r.mean_inversion_step_seconds;
      ep += r.epoch_wall_seconds;
      ++n;
    }
    if (n == 0) throw std::invalid_argument("timing_report: run has no epochs");
    return std::pair{inv / n, ep / n};
  };

  const auto [kfac_inv, kfac_ep] = means(it->second);
  std::ostringstream out;
  out << "algorithm,per_inversion_step_s,per_inversion_step_gap_pct,"
         "per_epoch_s,per_epoch_gap_pct\n";
  auto emit = [&](const std::string& name,
                  const std::vector<MetricsRecord>& recs) {
    const auto [inv, ep] = means(recs);
    out << name << ',' << fmt(inv) << ','
        << fmt(100.0 * (inv - kfac_inv) / kfac_inv) << ',' << fmt(ep) << ','
        << fmt(100.0 * (ep - kfac_ep) / kfac_ep) << '\n';
  };
  emit("kfac", it->second);
  for (const auto& [name, recs] : runs)
    if (name != "kfac") emit(name, recs);
  return out.str();
}

}  // namespace ang
