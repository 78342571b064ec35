#pragma once

// The eight simulation models and their analytic conditional laws.
//
//   M1  Y = X1^2 + exp(X2 + X3/3) + sin(X4 + X5) + e,           e ~ N(0,1)
//   M2  Y = X1^2 + exp(X2 + X3/3) + X4 - X5 + (0.5 + X2^2/2 + X5^2/2) e
//   M3  Y_k = X + e_k, e_k ~ equal mixture of N({-2,0,2}, 0.25^2), k = 1,2
//   M4  Y = (2X + U sin 2U, 2X + U cos 2U) + N(0, 0.4^2 I), U ~ U(0, 2 pi)
//   M5  Y = (X, X) + e, e ~ equal mixture of eight rotated Gaussians
//   M6  as M1 with e ~ t(3)
//   M7  Y = (5 + X1^2/3 + X2^2 + X3^2 + X4 + X5) exp(e/2),
//       e ~ 0.5 N(-2,1) + 0.5 N(2,1)
//   M8  Y ~ 0.5 N(-X1, 0.25^2) + 0.5 N(X1, 0.25^2)
//
// M3-M5 have a scalar covariate and a bivariate response; the others take
// d in {5, 100} covariates of which only the first five enter.

#include "wgr/dataio.hpp"
#include "wgr/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace wgr {

enum class ModelId { M1 = 1, M2, M3, M4, M5, M6, M7, M8 };

ModelId parse_model_id(std::string_view name);
std::string to_string(ModelId id);

class SyntheticModel {
 public:
  /// d is forced to 1 for M3-M5 and must be 5 or 100 otherwise.
  SyntheticModel(ModelId id, Index covariate_dim);

  ModelId id() const { return id_; }
  Index covariate_dim() const { return dim_; }
  Index response_dim() const;
  bool has_quantiles() const { return response_dim() == 1; }

 private:
  ModelId id_;
  Index dim_;
};

struct ConditionalTruth {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  std::optional<double> quantile;
};

/// n iid (X, Y) pairs.
Dataset sample(const SyntheticModel& model, Index n, std::uint64_t seed);

/// `count` draws of Y | X = x, one per row.
Matrix sample_conditional(const SyntheticModel& model, const RowVector& x, Index count, Rng& rng);

/// Analytic conditional mean and SD; with tau also the tau-quantile
/// (q = 1 models only).
ConditionalTruth truth(const SyntheticModel& model, const RowVector& x,
                       std::optional<double> tau = std::nullopt);

/// Smallest y with F(y) >= p for a continuous increasing CDF, by bisection
/// until the bracket is narrower than `tol`.
template <typename Cdf>
double bisect_quantile(Cdf&& cdf, double p, double lo, double hi, double tol = 1e-10) {
  while (cdf(lo) > p) lo -= (hi - lo);
  while (cdf(hi) < p) hi += (hi - lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace wgr
