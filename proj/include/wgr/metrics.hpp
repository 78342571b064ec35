#pragma once

// Evaluation quantities: L1/L2 prediction error, MSE of conditional
// mean/SD/quantiles against a synthetic truth, prediction-interval length
// and coverage, Gaussian KDE curves.
//
// Every test point i gets its own noise seed derive_seed(seed, i), so all
// metrics computed with the same seed see the same conditional samples and
// none depend on test-set ordering.

#include "wgr/condgen.hpp"
#include "wgr/dataio.hpp"
#include "wgr/synthetic.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wgr {

struct L1L2 {
  double l1 = 0.0;
  double l2 = 0.0;
};

struct MseSuite {
  double mse_mean = 0.0;
  double mse_sd = 0.0;
  std::map<double, double> mse_quantile;  // tau -> MSE
};

struct PiCp {
  double pi_length = 0.0;
  double coverage = 0.0;
};

/// L1 = mean Euclidean norm of Y_i - mean_k g(X_i, eta_ik); L2 = mean squared norm.
L1L2 l1_l2(const ConditionalSampler& gen, const Dataset& test, Index K, std::uint64_t seed);

/// Averages over the rows of test_X of squared deviations from truth().
/// For q = 2 models the SD/mean errors are averaged over coordinates;
/// requesting quantiles for them throws.
MseSuite mse_suite(const ConditionalSampler& gen, const SyntheticModel& model, const Matrix& test_X,
                   Index K, std::span<const double> taus, std::uint64_t seed);

PiCp pi_cp(const ConditionalSampler& gen, const Dataset& test, Index K, double level,
           std::uint64_t seed);

struct EvalOptions {
  Index K = 500;
  std::vector<double> taus{0.05, 0.25, 0.50, 0.75, 0.95};
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::string method;
  double l1 = 0.0;
  double l2 = 0.0;
  std::optional<double> mse_mean;
  std::optional<double> mse_sd;
  std::map<double, double> mse_quantile;
  std::optional<double> pi_length;
  std::optional<double> coverage;
  Index n_test = 0;
  Index K = 0;
  std::uint64_t seed = 0;

  /// (name, value) in a fixed column order; absent metrics are skipped.
  std::vector<std::pair<std::string, double>> metrics() const;
};

/// All applicable metrics in a single pass over the test set. `model`
/// enables the MSE suite; PI/CP are computed whenever q = 1.
EvalReport evaluate(const ConditionalSampler& gen, const Dataset& test,
                    const std::optional<SyntheticModel>& model, const EvalOptions& opts,
                    const std::string& method);

std::string report_csv(const EvalReport& r);
std::string report_keyvalue(const EvalReport& r);

/// Silverman's rule 1.06 * sd * n^(-1/5); falls back to 1 for degenerate samples.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian KDE evaluated at each grid point.
Eigen::VectorXd kde_curve(std::span<const double> samples, std::span<const double> grid,
                          double bandwidth);

/// Grid points that are strict local maxima of `density`.
std::vector<double> local_maxima(std::span<const double> grid, const Eigen::VectorXd& density);

/// Evenly spaced grid of `count` points on [lo, hi].
std::vector<double> linspace(double lo, double hi, Index count);

}  // namespace wgr
