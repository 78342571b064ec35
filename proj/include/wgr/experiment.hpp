#pragma once

// Experiment runner: data preparation, per-replication training of the
// NLS / cWGAN / WGR variants, evaluation, and the artifact files.
//
// Config is an INI file:
//
//   [data]     source = synthetic | csv, model, dim, train, val, test,
//              path, responses, drop, train_frac, val_frac, test_frac,
//              standardize
//   [methods]  list = NLS,cWGAN,WGR ; lambda_l ; traverse = true|false
//   [train]    noise_dim, J, batch, iterations, critic_steps, gp_lambda,
//              lipschitz = gradient_penalty | clipping, clip, lr, decay,
//              epsilon, generator_hidden, critic_hidden, slope,
//              eval_every, eval_K
//   [eval]     K, taus, level, kde_samples, kde_grid
//   [run]      replications, seed, threads

#include "wgr/dataio.hpp"
#include "wgr/metrics.hpp"
#include "wgr/synthetic.hpp"
#include "wgr/train.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wgr {

enum class Method { NLS, cWGAN, WGR };

std::string to_string(Method m);
Method parse_method(std::string_view name);

struct DataConfig {
  bool synthetic = true;
  ModelId model = ModelId::M1;
  Index dim = 5;
  Index n_train = 5000;
  Index n_val = 1000;
  Index n_test = 1000;
  std::filesystem::path csv_path;
  std::vector<std::string> responses;
  std::vector<std::string> drop;
  std::optional<std::array<double, 3>> fractions;  // csv only; else counts above
  bool standardize = true;                         // csv only
};

struct ExperimentConfig {
  DataConfig data;
  std::vector<Method> methods{Method::NLS, Method::cWGAN, Method::WGR};
  bool traverse_lambda = false;
  WgrConfig train;  // lambda_l / lambda_w are the WGR weights when not traversing
  EvalOptions eval;
  Index kde_samples = 5000;
  Index kde_grid = 200;
  Index replications = 1;
  std::uint64_t seed = 1;
  int threads = 1;
  std::filesystem::path out_dir = "out";

  void validate() const;
};

ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Fully resolved config in the same INI format.
std::string dump_config(const ExperimentConfig& cfg);

struct Splits {
  Dataset train, val, test;
};

/// Data of replication `rep` (synthetic draws or a CSV split, standardized
/// on the training part when configured).
Splits prepare_data(const ExperimentConfig& cfg, Index rep);

/// WgrConfig for a method: the weight corners for NLS / cWGAN.
WgrConfig method_config(const ExperimentConfig& cfg, Method m, Index rep);

struct MethodRun {
  Method method;
  Index rep = 0;
  std::optional<EvalReport> report;
  std::string error;
};

struct SummaryRow {
  std::string method;
  std::string metric;
  double mean = 0.0;
  double se = 0.0;
  Index n_ok = 0;
};

struct RunResult {
  std::vector<MethodRun> runs;
  std::vector<SummaryRow> summary;
  int exit_code = 0;
};

/// Trains and evaluates every method for every replication and writes the
/// artifacts into cfg.out_dir.
RunResult run_experiment(const ExperimentConfig& cfg);

enum class SweepAxis { NoiseDim, J };
SweepAxis parse_axis(std::string_view name);

/// One run per axis value in <out>/<axis>_<value>, plus sweep_summary.csv.
int run_sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<Index>& values);

/// Re-evaluates a generator checkpoint on replication 0's test split.
EvalReport eval_checkpoint(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint);

/// Writes train/val/test CSVs (and the split manifest for CSV sources) of
/// replication 0.
void export_data(const ExperimentConfig& cfg);

/// "mean(se)" with two decimals.
std::string format_mean_se(double mean, double se);

}  // namespace wgr
