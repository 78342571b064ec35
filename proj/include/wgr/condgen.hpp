#pragma once

// Monte Carlo inference through a conditional sampler: draws of Y | X = x,
// conditional mean and SD, type-1 empirical quantiles, prediction intervals.

#include "wgr/nets.hpp"
#include "wgr/synthetic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wgr {

/// Anything that can produce K draws from an (estimated) law of Y | X = x.
class ConditionalSampler {
 public:
  virtual ~ConditionalSampler() = default;
  virtual Index covariate_dim() const = 0;
  virtual Index response_dim() const = 0;
  /// K x q, deterministic in (x, K, seed).
  virtual Matrix draw(const RowVector& x, Index K, std::uint64_t seed) const = 0;
};

/// A frozen generator g(x, eta) with eta ~ N(0, I_m).
class TrainedGenerator final : public ConditionalSampler {
 public:
  TrainedGenerator(Mlp net, Index noise_dim);

  const Mlp& net() const { return net_; }
  Index noise_dim() const { return noise_dim_; }
  Index covariate_dim() const override { return net_.spec().in_dim - noise_dim_; }
  Index response_dim() const override { return net_.spec().out_dim; }
  Matrix draw(const RowVector& x, Index K, std::uint64_t seed) const override;

 private:
  Mlp net_;
  Index noise_dim_;
};

/// Exact sampler for a synthetic model; the reference point for metrics.
class OracleSampler final : public ConditionalSampler {
 public:
  explicit OracleSampler(SyntheticModel model) : model_(model) {}
  Index covariate_dim() const override { return model_.covariate_dim(); }
  Index response_dim() const override { return model_.response_dim(); }
  Matrix draw(const RowVector& x, Index K, std::uint64_t seed) const override;

 private:
  SyntheticModel model_;
};

void save_generator(const std::filesystem::path& path, const TrainedGenerator& gen);
TrainedGenerator load_generator(const std::filesystem::path& path);

struct ConditionalSampleSet {
  RowVector x;
  Matrix samples;  // K x q
  Index K() const { return samples.rows(); }
};

ConditionalSampleSet draw(const ConditionalSampler& gen, const RowVector& x, Index K,
                          std::uint64_t seed);

/// Row mean.
template <typename Derived>
RowVector sample_mean(const Eigen::MatrixBase<Derived>& s) {
  return s.colwise().sum() / static_cast<double>(s.rows());
}

/// Population SD (divisor K).
template <typename Derived>
RowVector sample_sd(const Eigen::MatrixBase<Derived>& s) {
  const RowVector m = sample_mean(s);
  return ((s.rowwise() - m).array().square().colwise().sum() / static_cast<double>(s.rows()))
      .sqrt()
      .matrix();
}

/// 1-based rank ceil(tau K), clamped to [1, K]. The relative guard keeps
/// products such as 0.95 * 100 from rounding up to the next rank.
inline Index quantile_rank(double tau, Index K) {
  const double raw = tau * static_cast<double>(K);
  const auto r = static_cast<Index>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<Index>(r, 1, K);
}

/// Type-1 empirical quantile: the ceil(tau K)-th order statistic.
template <typename Derived>
double empirical_quantile(const Eigen::DenseBase<Derived>& values, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("quantile: tau must lie in (0, 1)");
  if (values.size() == 0) throw std::invalid_argument("quantile: no samples");
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(values.size()));
  for (Index j = 0; j < values.cols(); ++j)
    for (Index i = 0; i < values.rows(); ++i) v.push_back(values(i, j));
  const Index r = quantile_rank(tau, values.size());
  std::nth_element(v.begin(), v.begin() + (r - 1), v.end());
  return v[static_cast<std::size_t>(r - 1)];
}

RowVector cond_mean(const ConditionalSampleSet& s);
RowVector cond_sd(const ConditionalSampleSet& s);
/// q = 1 only.
double cond_quantile(const ConditionalSampleSet& s, double tau);
/// [Q((1-level)/2), Q((1+level)/2)], q = 1 only.
std::pair<double, double> pred_interval(const ConditionalSampleSet& s, double level = 0.95);

}  // namespace wgr
