#include "wgr/synthetic.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <stdexcept>

namespace wgr {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double additive_mean(const RowVector& x) {
  return x(0) * x(0) + std::exp(x(1) + x(2) / 3.0) + std::sin(x(3) + x(4));
}

double hetero_mean(const RowVector& x) {
  return x(0) * x(0) + std::exp(x(1) + x(2) / 3.0) + x(3) - x(4);
}

double hetero_sd(const RowVector& x) { return 0.5 + x(1) * x(1) / 2.0 + x(4) * x(4) / 2.0; }

double m7_scale(const RowVector& x) {
  return 5.0 + x(0) * x(0) / 3.0 + x(1) * x(1) + x(2) * x(2) + x(3) + x(4);
}

// E[exp(t e)] for e ~ 0.5 N(-2,1) + 0.5 N(2,1).
double m7_mgf(double t) {
  return 0.5 * std::exp(t * t / 2.0) * (std::exp(-2.0 * t) + std::exp(2.0 * t));
}

double m7_noise_cdf(double e) { return 0.5 * normal_cdf(e + 2.0) + 0.5 * normal_cdf(e - 2.0); }

constexpr double kM5Minor = 0.16;

// Mean and covariance of mixture component i (1..8) of M5: a Gaussian with
// principal axis at angle pi*i/4, SDs 1 and 0.16, centred 3 units out.
void m5_component(int i, Eigen::Vector2d& mu, Eigen::Matrix2d& rot) {
  const double a = kPi * i / 4.0;
  mu << 3.0 * std::cos(a), 3.0 * std::sin(a);
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
}

}  // namespace

ModelId parse_model_id(std::string_view name) {
  if (name.size() == 2 && (name[0] == 'M' || name[0] == 'm') && name[1] >= '1' && name[1] <= '8')
    return static_cast<ModelId>(name[1] - '0');
  throw std::invalid_argument("unknown synthetic model '" + std::string(name) + "' (expected M1..M8)");
}

std::string to_string(ModelId id) { return "M" + std::to_string(static_cast<int>(id)); }

SyntheticModel::SyntheticModel(ModelId id, Index covariate_dim) : id_(id), dim_(covariate_dim) {
  switch (id_) {
    case ModelId::M3:
    case ModelId::M4:
    case ModelId::M5:
      dim_ = 1;
      break;
    default:
      if (dim_ != 5 && dim_ != 100)
        throw std::invalid_argument(to_string(id_) + ": covariate dimension must be 5 or 100, got " +
                                    std::to_string(covariate_dim));
  }
}

Index SyntheticModel::response_dim() const {
  switch (id_) {
    case ModelId::M3:
    case ModelId::M4:
    case ModelId::M5:
      return 2;
    default:
      return 1;
  }
}

Matrix sample_conditional(const SyntheticModel& model, const RowVector& x, Index count, Rng& rng) {
  if (x.size() != model.covariate_dim())
    throw std::invalid_argument("sample_conditional: x has dimension " + std::to_string(x.size()));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix y(count, model.response_dim());

  for (Index k = 0; k < count; ++k) {
    switch (model.id()) {
      case ModelId::M1:
        y(k, 0) = additive_mean(x) + normal(rng);
        break;
      case ModelId::M2:
        y(k, 0) = hetero_mean(x) + hetero_sd(x) * normal(rng);
        break;
      case ModelId::M3:
        for (Index c = 0; c < 2; ++c) {
          const double u = unif(rng);
          const double centre = u < 1.0 / 3.0 ? -2.0 : (u < 2.0 / 3.0 ? 0.0 : 2.0);
          y(k, c) = x(0) + centre + 0.25 * normal(rng);
        }
        break;
      case ModelId::M4: {
        const double u = 2.0 * kPi * unif(rng);
        y(k, 0) = 2.0 * x(0) + u * std::sin(2.0 * u) + 0.4 * normal(rng);
        y(k, 1) = 2.0 * x(0) + u * std::cos(2.0 * u) + 0.4 * normal(rng);
        break;
      }
      case ModelId::M5: {
        const double u = 8.0 * unif(rng);
        const int i = std::min(8, static_cast<int>(std::floor(u)) + 1);
        Eigen::Vector2d mu;
        Eigen::Matrix2d rot;
        m5_component(i, mu, rot);
        Eigen::Vector2d z(normal(rng), kM5Minor * normal(rng));
        const Eigen::Vector2d e = mu + rot * z;
        y(k, 0) = x(0) + e(0);
        y(k, 1) = x(0) + e(1);
        break;
      }
      case ModelId::M6: {
        // t(3) = Z / sqrt(chi2_3 / 3)
        const double z = normal(rng);
        double chi2 = 0.0;
        for (int j = 0; j < 3; ++j) {
          const double g = normal(rng);
          chi2 += g * g;
        }
        y(k, 0) = additive_mean(x) + z / std::sqrt(chi2 / 3.0);
        break;
      }
      case ModelId::M7: {
        const double centre = unif(rng) < 0.5 ? -2.0 : 2.0;
        const double e = centre + normal(rng);
        y(k, 0) = m7_scale(x) * std::exp(0.5 * e);
        break;
      }
      case ModelId::M8: {
        const double centre = unif(rng) < 0.5 ? -x(0) : x(0);
        y(k, 0) = centre + 0.25 * normal(rng);
        break;
      }
    }
  }
  return y;
}

Dataset sample(const SyntheticModel& model, Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  Rng rng(seed);
  Matrix X(n, model.covariate_dim());
  Matrix Y(n, model.response_dim());
  for (Index i = 0; i < n; ++i) {
    const Matrix xi = standard_normal(1, model.covariate_dim(), rng);
    X.row(i) = xi.row(0);
    Y.row(i) = sample_conditional(model, X.row(i), 1, rng).row(0);
  }
  return make_dataset(std::move(X), std::move(Y));
}

ConditionalTruth truth(const SyntheticModel& model, const RowVector& x, std::optional<double> tau) {
  if (x.size() != model.covariate_dim())
    throw std::invalid_argument("truth: x has dimension " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(model.covariate_dim()));
  if (tau && !(*tau > 0.0 && *tau < 1.0))
    throw std::invalid_argument("truth: tau must lie in (0, 1)");
  if (tau && !model.has_quantiles())
    throw std::invalid_argument("truth: " + to_string(model.id()) +
                                " has a bivariate response; no scalar quantile");

  ConditionalTruth t;
  const Index q = model.response_dim();
  t.mean.resize(q);
  t.sd.resize(q);

  switch (model.id()) {
    case ModelId::M1:
      t.mean(0) = additive_mean(x);
      t.sd(0) = 1.0;
      if (tau) t.quantile = t.mean(0) + normal_quantile(*tau);
      break;
    case ModelId::M2:
      t.mean(0) = hetero_mean(x);
      t.sd(0) = hetero_sd(x);
      if (tau) t.quantile = t.mean(0) + t.sd(0) * normal_quantile(*tau);
      break;
    case ModelId::M3: {
      // mixture variance: E[c^2] = 8/3 plus component variance
      t.mean.setConstant(x(0));
      t.sd.setConstant(std::sqrt(8.0 / 3.0 + 0.0625));
      break;
    }
    case ModelId::M4: {
      // E[U sin 2U] = -1/2, E[U cos 2U] = 0,
      // E[U^2 sin^2 2U] = 2 pi^2/3 - 1/16, E[U^2 cos^2 2U] = 2 pi^2/3 + 1/16.
      const double base = 2.0 * kPi * kPi / 3.0;
      t.mean << 2.0 * x(0) - 0.5, 2.0 * x(0);
      t.sd << std::sqrt(base - 1.0 / 16.0 - 0.25 + 0.16), std::sqrt(base + 1.0 / 16.0 + 0.16);
      break;
    }
    case ModelId::M5: {
      Eigen::Vector2d mu_sum = Eigen::Vector2d::Zero();
      Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
      for (int i = 1; i <= 8; ++i) {
        Eigen::Vector2d mu;
        Eigen::Matrix2d rot;
        m5_component(i, mu, rot);
        const Eigen::Matrix2d cov =
            rot * Eigen::Vector2d(1.0, kM5Minor * kM5Minor).asDiagonal() * rot.transpose();
        mu_sum += mu;
        second += cov + mu * mu.transpose();
      }
      const Eigen::Vector2d m = mu_sum / 8.0;
      const Eigen::Matrix2d var = second / 8.0 - m * m.transpose();
      t.mean << x(0) + m(0), x(0) + m(1);
      t.sd << std::sqrt(var(0, 0)), std::sqrt(var(1, 1));
      break;
    }
    case ModelId::M6:
      t.mean(0) = additive_mean(x);
      t.sd(0) = std::sqrt(3.0);
      if (tau)
        t.quantile = t.mean(0) +
                     boost::math::quantile(boost::math::students_t_distribution<double>(3.0), *tau);
      break;
    case ModelId::M7: {
      const double s = m7_scale(x);
      const double m1 = m7_mgf(0.5);
      const double m2 = m7_mgf(1.0);
      t.mean(0) = s * m1;
      t.sd(0) = std::abs(s) * std::sqrt(m2 - m1 * m1);
      if (tau) {
        // exp is increasing, so the quantile maps through; a negative scale
        // flips the tail.
        const double p = s >= 0.0 ? *tau : 1.0 - *tau;
        const double e = bisect_quantile(m7_noise_cdf, p, -10.0, 10.0);
        t.quantile = s * std::exp(0.5 * e);
      }
      break;
    }
    case ModelId::M8: {
      const double a = x(0);
      t.mean(0) = 0.0;
      t.sd(0) = std::sqrt(a * a + 0.0625);
      if (tau) {
        auto cdf = [a](double y) {
          return 0.5 * normal_cdf((y + a) / 0.25) + 0.5 * normal_cdf((y - a) / 0.25);
        };
        const double half = std::abs(a) + 3.0;
        t.quantile = bisect_quantile(cdf, *tau, -half, half);
      }
      break;
    }
  }
  return t;
}

}  // namespace wgr
