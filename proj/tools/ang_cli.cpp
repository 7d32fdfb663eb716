#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ang/bench.hpp"

namespace {

using namespace ang;

std::vector<int> parse_dims(const std::string& s) {
  std::vector<int> dims;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) dims.push_back(std::stoi(tok));
  return dims;
}

double default_lr(OptimizerKind k) {
  return k == OptimizerKind::Sgd ? 0.01 : 0.005;
}

struct TrainArgs {
  std::string optimizer = "sgd";
  std::string dataset = "blobs";
  std::string schedule = "linear";
  std::string out = "metrics.csv";
  std::string hidden = "64,64";
  int epochs = 20;
  int batch_size = 64;
  double lr = -1.0;  // < 0: per-optimizer default
  double damping = 1e-3;
  double schedule_k = 3.0;
  double fixed_lambda = -1.0;
  double split = 0.8;
  int switch_epoch = -1;
  int t_inv = 1;
  int s_prime = 1;
  int label_column = -1;
  unsigned seed = 1;
  bool emit_json = false;
  bool ifang_normalize = false;
};

RunConfig make_run_config(const TrainArgs& a) {
  RunConfig cfg;
  cfg.opt.kind = optimizer_from_string(a.optimizer);
  cfg.opt.learning_rate = a.lr > 0 ? a.lr : default_lr(cfg.opt.kind);
  cfg.opt.damping = a.damping;
  cfg.opt.schedule = schedule_from_string(a.schedule);
  cfg.opt.schedule_k = a.schedule_k;
  cfg.opt.fixed_lambda = a.fixed_lambda;
  cfg.opt.switch_epoch = a.switch_epoch;
  cfg.opt.t_inv = a.t_inv;
  cfg.opt.s_prime = a.s_prime;
  cfg.opt.ifang_normalize = a.ifang_normalize;
  cfg.hidden_dims = parse_dims(a.hidden);
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.seed = a.seed;
  cfg.dataset = a.dataset;
  cfg.label_column = a.label_column;
  cfg.split_fraction = a.split;
  return cfg;
}

void add_train_flags(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--optimizer", a.optimizer,
                  "sgd|kfac|ang|ifang|truncated-kfac");
  cmd->add_option("--dataset", a.dataset, "CSV path or 'blobs'");
  cmd->add_option("--epochs", a.epochs);
  cmd->add_option("--batch-size", a.batch_size);
  cmd->add_option("--lr", a.lr, "learning rate (default 0.01 sgd, 0.005 others)");
  cmd->add_option("--damping", a.damping);
  cmd->add_option("--schedule", a.schedule, "linear|exp-concave|power-convex");
  cmd->add_option("--schedule-k", a.schedule_k);
  cmd->add_option("--fixed-lambda", a.fixed_lambda,
                  "pin the blend coefficient (testing)");
  cmd->add_option("--switch-epoch", a.switch_epoch);
  cmd->add_option("--t-inv", a.t_inv, "recompute inverses every N steps");
  cmd->add_option("--s-prime", a.s_prime, "IFANG group count");
  cmd->add_option("--seed", a.seed);
  cmd->add_option("--hidden", a.hidden, "hidden widths, comma separated");
  cmd->add_option("--split", a.split, "train fraction");
  cmd->add_option("--label-column", a.label_column);
  cmd->add_flag("--ifang-normalize", a.ifang_normalize);
}

int cmd_train(const TrainArgs& a) {
  RunResult res = run_training(make_run_config(a));
  emit_metrics(res.records, a.out, a.emit_json ? "json" : "csv");
  if (!res.records.empty() && res.records.back().failed) {
    std::cerr << "error: numerical-failure mid-run, partial metrics written to "
              << a.out << '\n';
    return 2;
  }
  std::cout << "wrote " << res.records.size() << " records to " << a.out << '\n';
  return 0;
}

int cmd_compare(const std::string& config_path, const std::string& out_dir,
                TrainArgs base, const CLI::App* cmd) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config: " + config_path);
    in >> cfg;
  }
  // config keys fill in anything the CLI did not set explicitly
  auto overridden = [&](const std::string& flag) {
    return cmd->count(flag) > 0;
  };
  auto pick = [&](const std::string& key, auto& slot, const std::string& flag) {
    if (cfg.contains(key) && !overridden(flag))
      slot = cfg[key].get<std::decay_t<decltype(slot)>>();
  };
  pick("dataset", base.dataset, "--dataset");
  pick("epochs", base.epochs, "--epochs");
  pick("batch_size", base.batch_size, "--batch-size");
  pick("lr", base.lr, "--lr");
  pick("damping", base.damping, "--damping");
  pick("schedule", base.schedule, "--schedule");
  pick("schedule_k", base.schedule_k, "--schedule-k");
  pick("switch_epoch", base.switch_epoch, "--switch-epoch");
  pick("t_inv", base.t_inv, "--t-inv");
  pick("s_prime", base.s_prime, "--s-prime");
  pick("seed", base.seed, "--seed");
  pick("hidden", base.hidden, "--hidden");
  pick("split", base.split, "--split");
  pick("label_column", base.label_column, "--label-column");

  std::string optimizers = "sgd,kfac,ang,ifang,truncated-kfac";
  if (cfg.contains("optimizers")) optimizers = cfg["optimizers"].get<std::string>();

  std::filesystem::create_directories(out_dir);
  std::map<std::string, std::vector<MetricsRecord>> runs;
  std::stringstream ss(optimizers);
  std::string name;
  while (std::getline(ss, name, ',')) {
    TrainArgs a = base;
    a.optimizer = name;
    RunConfig rc = make_run_config(a);
    RunResult res = run_training(rc);
    const std::string path = out_dir + "/" + name + ".csv";
    emit_metrics(res.records, path);
    runs[name] = res.records;
    std::cout << name << ": final train_loss="
              << res.records.back().train_loss << '\n';
  }
  if (runs.count("kfac") && runs.size() >= 2) {
    std::ofstream out(out_dir + "/timing_report.csv");
    out << timing_report(runs);
    std::cout << "wrote " << out_dir << "/timing_report.csv\n";
  }
  return 0;
}

bool report(const std::string& name, bool ok) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
  return ok;
}

int cmd_selftest() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto randn = [&](int r, int c) {
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = gauss(rng);
    return M;
  };
  bool all = true;

  {  // SMW vs dense SPD inverse
    bool ok = true;
    for (int trial = 0; trial < 25 && ok; ++trial) {
      Matrix Y = randn(2 + trial % 7, 3 + trial % 9);
      for (double rho : {1e-3, 1e-1, 1.0}) {
        Matrix a = smw_inverse(Y, Damping(rho));
        Matrix b = spd_inverse(Y.transpose() * Y, Damping(rho));
        ok = ok && (a - b).norm() / b.norm() < 1e-8;
      }
    }
    all &= report("smw-oracle", ok);
  }
  {  // Kronecker application vs explicit product
    bool ok = true;
    for (int trial = 0; trial < 25 && ok; ++trial) {
      Matrix O = randn(4, 3), G = randn(4, 3);
      Matrix omega = O * O.transpose() + Matrix::Identity(4, 4);
      Matrix gamma = G * G.transpose() + Matrix::Identity(4, 4);
      Matrix V = randn(4, 4);
      Matrix fast = kron_apply(omega, gamma, V);
      Matrix K = kron_explicit_oracle(omega, gamma);
      Vector v = Eigen::Map<const Vector>(V.data(), V.size());
      Vector kv = K * v;
      Matrix slow = Eigen::Map<const Matrix>(kv.data(), 4, 4);
      ok = ok && (fast - slow).norm() / slow.norm() < 1e-10;
    }
    all &= report("kronecker-oracle", ok);
  }
  {  // finite differences on a small ReLU net
    Network net = make_mlp({6, 8, 4}, Activation::ReLU,
                           Loss::SoftmaxCrossEntropy, 11);
    Matrix X = randn(16, 6);
    Targets t;
    t.labels.resize(16);
    for (int i = 0; i < 16; ++i) t.labels(i) = i % 4;
    all &= report("finite-diff", finite_diff_check(net, X, t, 1e-5) < 1e-6);
  }
  {  // slerp norm preservation
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
      Matrix t = randn(8, 1), g = randn(8, 1);
      if (t.cwiseProduct(g).sum() <= 0) g = g - 2.0 * t.cwiseProduct(g).sum() / t.squaredNorm() * t;
      for (double lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        Matrix d = slerp_blend(t, g, lam);
        ok = ok && std::abs(d.norm() - g.norm()) / g.norm() < 1e-9;
      }
    }
    all &= report("slerp", ok);
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"natural-gradient optimizer benchmark harness"};
  app.require_subcommand(1);

  TrainArgs targs;
  std::string out = "metrics.csv";
  bool emit_json = false;
  CLI::App* train = app.add_subcommand("train", "run one training job");
  add_train_flags(train, targs);
  train->add_option("--out", out, "metrics output path");
  train->add_flag("--emit-json", emit_json, "emit JSON instead of CSV");

  TrainArgs cargs;
  std::string config_path, out_dir = "compare_out";
  CLI::App* compare =
      app.add_subcommand("compare", "run all optimizers and a timing report");
  add_train_flags(compare, cargs);
  compare->add_option("--config", config_path, "flat key-value JSON config");
  compare->add_option("--out-dir", out_dir);

  CLI::App* selftest = app.add_subcommand("selftest", "run the oracle suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      targs.out = out;
      targs.emit_json = emit_json;
      return cmd_train(targs);
    }
    if (compare->parsed()) return cmd_compare(config_path, out_dir, cargs, compare);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
