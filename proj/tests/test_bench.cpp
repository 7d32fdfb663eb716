#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ang/bench.hpp"

using namespace ang;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

RunConfig tiny_run(OptimizerKind kind) {
  RunConfig cfg;
  cfg.opt.kind = kind;
  cfg.opt.learning_rate = kind == OptimizerKind::Sgd ? 0.01 : 0.005;
  cfg.opt.damping = 0.1;
  cfg.hidden_dims = {8};
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.blob_per_class = 40;
  cfg.blob_dim = 5;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("synth_blobs: determinism and separable limit") {
  Dataset a = synth_blobs(3, 4, 20, 1.0, 7);
  Dataset b = synth_blobs(3, 4, 20, 1.0, 7);
  CHECK((a.X - b.X).norm() == 0.0);
  CHECK((a.y - b.y).norm() == 0);

  Dataset sep = synth_blobs(3, 4, 20, 0.0, 8);
  // spread 0: every point sits on its class center, classes stay distinct
  for (int c = 0; c < 3; ++c) {
    int first = -1;
    for (int i = 0; i < sep.y.size(); ++i)
      if (sep.y(i) == c) {
        if (first < 0) first = i;
        CHECK((sep.X.row(i) - sep.X.row(first)).norm() == 0.0);
      }
  }
}

TEST_CASE("synth_blobs: invalid parameters rejected") {
  CHECK_THROWS_AS(synth_blobs(1, 4, 10, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_blobs(2, 0, 10, 1.0, 1), std::invalid_argument);
}

TEST_CASE("load_csv_dataset: toy file, fixed split") {
  const std::string path = temp_path("ang_toy.csv");
  {
    std::ofstream out(path);
    out << "1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,0\n7.0,8.0,1\n9.0,0.0,0\n2.0,5.0,1\n";
  }
  Dataset ds = load_csv_dataset(path, -1, 0.5, 42);
  CHECK(ds.X.rows() == 6);
  CHECK(ds.X.cols() == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.train_idx.size() == 3);
  CHECK(ds.val_idx.size() == 3);
  Dataset again = load_csv_dataset(path, -1, 0.5, 42);
  CHECK(ds.train_idx == again.train_idx);  // recorded-fixture determinism
  std::remove(path.c_str());
}

TEST_CASE("load_csv_dataset: malformed row names the line") {
  const std::string path = temp_path("ang_bad.csv");
  {
    std::ofstream out(path);
    out << "1.0,2.0,0\n3.0,oops,1\n";
  }
  try {
    load_csv_dataset(path, -1, 0.5, 1);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("load_csv_dataset: single-class data rejected") {
  const std::string path = temp_path("ang_oneclass.csv");
  {
    std::ofstream out(path);
    out << "1.0,0\n2.0,0\n3.0,0\n4.0,0\n";
  }
  CHECK_THROWS_AS(load_csv_dataset(path, -1, 0.5, 1), std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("run_training: epochs + 1 records, epoch 0 is the initial eval") {
  RunConfig cfg = tiny_run(OptimizerKind::Sgd);
  cfg.epochs = 3;
  RunResult res = run_training(cfg);
  REQUIRE(res.records.size() == 4);
  CHECK(res.records[0].epoch == 0);
  CHECK(res.records[0].epoch_wall_seconds == 0.0);
  for (int i = 0; i < 4; ++i) CHECK(res.records[i].epoch == i);
}

TEST_CASE("run_training: zero epochs gives a single evaluation record") {
  RunConfig cfg = tiny_run(OptimizerKind::Sgd);
  cfg.epochs = 0;
  RunResult res = run_training(cfg);
  CHECK(res.records.size() == 1);
}

TEST_CASE("run_training: full split reports validation as absent") {
  RunConfig cfg = tiny_run(OptimizerKind::Sgd);
  cfg.split_fraction = 1.0;
  RunResult res = run_training(cfg);
  CHECK(std::isnan(res.records.back().val_loss));
  CHECK(std::isnan(res.records.back().val_accuracy));
}

TEST_CASE("run_training is deterministic apart from wall clock") {
  for (OptimizerKind kind : {OptimizerKind::Sgd, OptimizerKind::Ang}) {
    RunConfig cfg = tiny_run(kind);
    std::string a = metrics_to_csv(run_training(cfg).records, false);
    std::string b = metrics_to_csv(run_training(cfg).records, false);
    CHECK(a == b);
  }
}

TEST_CASE("run_training: injected clock isolates step timing") {
  // fake clock advances one second per reading; each timed interval then
  // spans exactly the readings taken inside the training step
  RunConfig cfg = tiny_run(OptimizerKind::Sgd);
  cfg.epochs = 1;
  long ticks = 0;
  cfg.clock = [&ticks]() { return static_cast<double>(ticks++); };
  RunResult res = run_training(cfg);
  const int steps = (40 * 3 * 8 / 10 + cfg.batch_size - 1) / cfg.batch_size;
  // two readings per step, interval = 1 fake second each
  CHECK(res.records[1].epoch_wall_seconds ==
        doctest::Approx(static_cast<double>(steps)));
  CHECK(res.records[1].mean_inversion_step_seconds == doctest::Approx(1.0));
}

TEST_CASE("emit_metrics: CSV round-trips at full precision") {
  RunConfig cfg = tiny_run(OptimizerKind::Ifang);
  RunResult res = run_training(cfg);
  const std::string path = temp_path("ang_metrics.csv");
  emit_metrics(res.records, path);
  auto parsed = parse_metrics_csv(path);
  REQUIRE(parsed.size() == res.records.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].epoch == res.records[i].epoch);
    CHECK(parsed[i].train_loss == res.records[i].train_loss);
    CHECK(parsed[i].val_accuracy == res.records[i].val_accuracy);
    CHECK(parsed[i].lambda_blend_value == res.records[i].lambda_blend_value);
  }
  std::remove(path.c_str());
}

TEST_CASE("emit_metrics: single record gives header plus one row") {
  MetricsRecord r;
  r.epoch = 0;
  std::string csv = metrics_to_csv({r});
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("emit_metrics: JSON validates against the documented schema") {
  RunConfig cfg = tiny_run(OptimizerKind::Ang);
  cfg.epochs = 1;
  RunResult res = run_training(cfg);
  const std::string path = temp_path("ang_metrics.json");
  emit_metrics(res.records, path, "json");
  std::ifstream in(path);
  nlohmann::json arr;
  in >> arr;
  REQUIRE(arr.is_array());
  REQUIRE(arr.size() == res.records.size());
  for (const auto& rec : arr) {
    for (const char* key : {"epoch", "train_loss", "train_acc", "val_loss",
                            "val_acc", "epoch_time_s", "inv_step_time_s",
                            "lambda", "failed"})
      CHECK(rec.contains(key));
    CHECK(rec["epoch"].is_number_integer());
    CHECK(rec["train_loss"].is_number());
  }
  std::remove(path.c_str());
}

TEST_CASE("emit_metrics: empty records rejected") {
  CHECK_THROWS_AS(emit_metrics({}, temp_path("x.csv")), std::invalid_argument);
}

TEST_CASE("timing_report: structure, zero self-gap, missing baseline") {
  RunConfig cfg = tiny_run(OptimizerKind::Kfac);
  cfg.epochs = 1;
  auto recs = run_training(cfg).records;

  std::map<std::string, std::vector<MetricsRecord>> runs;
  runs["kfac"] = recs;
  runs["twin"] = recs;  // identical run under a second label
  std::string report = timing_report(runs);
  CHECK(report.find("algorithm,per_inversion_step_s,per_inversion_step_gap_pct,"
                    "per_epoch_s,per_epoch_gap_pct") == 0);
  CHECK(report.find("twin,") != std::string::npos);
  CHECK(report.find(",0,") != std::string::npos);  // 0% gap for the twin

  runs.erase("kfac");
  runs["sgd"] = recs;
  CHECK_THROWS_AS(timing_report(runs), std::invalid_argument);
}

TEST_CASE("K-FAC beats SGD early on the blobs fixture") {
  double kfac_sum = 0.0, sgd_sum = 0.0;
  for (unsigned seed : {1u, 2u, 3u}) {
    RunConfig cfg;
    cfg.hidden_dims = {32};
    cfg.epochs = 10;
    cfg.blob_per_class = 300;
    cfg.blob_dim = 20;
    cfg.seed = seed;
    cfg.opt.kind = OptimizerKind::Kfac;
    cfg.opt.learning_rate = 0.02;
    cfg.opt.damping = 0.01;
    kfac_sum += run_training(cfg).records.back().train_loss;
    cfg.opt.kind = OptimizerKind::Sgd;
    cfg.opt.learning_rate = 0.01;
    sgd_sum += run_training(cfg).records.back().train_loss;
  }
  CHECK(kfac_sum / 3.0 < sgd_sum / 3.0);
}
