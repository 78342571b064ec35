#include "wgr/metrics.hpp"

#include "wgr/io_util.hpp"
#include "wgr/rng.hpp"

#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace wgr {

namespace {

void check_test(const ConditionalSampler& gen, const Dataset& test) {
  if (test.size() == 0) throw std::invalid_argument("metrics: empty test set");
  if (test.x_dim() != gen.covariate_dim() || test.y_dim() != gen.response_dim())
    throw std::invalid_argument("metrics: test set dimensions do not match the sampler");
}

std::string tau_label(double tau) {
  std::ostringstream os;
  os << "mse_q" << tau;
  return os.str();
}

}  // namespace

L1L2 l1_l2(const ConditionalSampler& gen, const Dataset& test, Index K, std::uint64_t seed) {
  check_test(gen, test);
  L1L2 out;
  for (Index i = 0; i < test.size(); ++i) {
    const Matrix s = gen.draw(test.X.row(i), K, derive_seed(seed, static_cast<std::uint64_t>(i)));
    const double sq = (test.Y.row(i) - sample_mean(s)).squaredNorm();
    out.l1 += std::sqrt(sq);
    out.l2 += sq;
  }
  const auto n = static_cast<double>(test.size());
  out.l1 /= n;
  out.l2 /= n;
  return out;
}

MseSuite mse_suite(const ConditionalSampler& gen, const SyntheticModel& model, const Matrix& test_X,
                   Index K, std::span<const double> taus, std::uint64_t seed) {
  if (test_X.rows() == 0) throw std::invalid_argument("mse_suite: no test covariates");
  if (!taus.empty() && !model.has_quantiles())
    throw std::invalid_argument("mse_suite: quantile MSE requested for bivariate model " +
                                to_string(model.id()));
  MseSuite out;
  for (double tau : taus) out.mse_quantile[tau] = 0.0;
  const auto q = static_cast<double>(model.response_dim());
  for (Index i = 0; i < test_X.rows(); ++i) {
    const RowVector x = test_X.row(i);
    const Matrix s = gen.draw(x, K, derive_seed(seed, static_cast<std::uint64_t>(i)));
    const ConditionalTruth t = truth(model, x);
    out.mse_mean += (sample_mean(s).transpose() - t.mean).squaredNorm() / q;
    out.mse_sd += (sample_sd(s).transpose() - t.sd).squaredNorm() / q;
    for (double tau : taus) {
      const double est = empirical_quantile(s.col(0), tau);
      const double d = est - *truth(model, x, tau).quantile;
      out.mse_quantile[tau] += d * d;
    }
  }
  const auto n = static_cast<double>(test_X.rows());
  out.mse_mean /= n;
  out.mse_sd /= n;
  for (auto& [tau, v] : out.mse_quantile) v /= n;
  return out;
}

PiCp pi_cp(const ConditionalSampler& gen, const Dataset& test, Index K, double level,
           std::uint64_t seed) {
  check_test(gen, test);
  if (test.y_dim() != 1) throw std::invalid_argument("pi_cp: requires a scalar response");
  PiCp out;
  Index hits = 0;
  for (Index i = 0; i < test.size(); ++i) {
    ConditionalSampleSet s{test.X.row(i),
                           gen.draw(test.X.row(i), K, derive_seed(seed, static_cast<std::uint64_t>(i)))};
    const auto [lo, hi] = pred_interval(s, level);
    out.pi_length += hi - lo;
    const double y = test.Y(i, 0);
    if (y >= lo && y <= hi) ++hits;
  }
  const auto n = static_cast<double>(test.size());
  out.pi_length /= n;
  out.coverage = static_cast<double>(hits) / n;
  return out;
}

EvalReport evaluate(const ConditionalSampler& gen, const Dataset& test,
                    const std::optional<SyntheticModel>& model, const EvalOptions& opts,
                    const std::string& method) {
  check_test(gen, test);
  EvalReport r;
  r.method = method;
  r.n_test = test.size();
  r.K = opts.K;
  r.seed = opts.seed;

  const bool scalar = test.y_dim() == 1;
  const bool quantiles = model && model->has_quantiles();
  double mse_mean = 0.0, mse_sd = 0.0, pi = 0.0;
  Index hits = 0;
  std::map<double, double> mse_q;
  if (quantiles)
    for (double tau : opts.taus) mse_q[tau] = 0.0;

  for (Index i = 0; i < test.size(); ++i) {
    const RowVector x = test.X.row(i);
    const Matrix s = gen.draw(x, opts.K, derive_seed(opts.seed, static_cast<std::uint64_t>(i)));
    const RowVector m = sample_mean(s);
    const double sq = (test.Y.row(i) - m).squaredNorm();
    r.l1 += std::sqrt(sq);
    r.l2 += sq;
    if (model) {
      const ConditionalTruth t = truth(*model, x);
      const auto q = static_cast<double>(test.y_dim());
      mse_mean += (m.transpose() - t.mean).squaredNorm() / q;
      mse_sd += (sample_sd(s).transpose() - t.sd).squaredNorm() / q;
      for (auto& [tau, acc] : mse_q) {
        const double d = empirical_quantile(s.col(0), tau) - *truth(*model, x, tau).quantile;
        acc += d * d;
      }
    }
    if (scalar) {
      ConditionalSampleSet set{x, s};
      const auto [lo, hi] = pred_interval(set, opts.level);
      pi += hi - lo;
      if (test.Y(i, 0) >= lo && test.Y(i, 0) <= hi) ++hits;
    }
  }
  const auto n = static_cast<double>(test.size());
  r.l1 /= n;
  r.l2 /= n;
  if (model) {
    r.mse_mean = mse_mean / n;
    r.mse_sd = mse_sd / n;
    for (auto& [tau, acc] : mse_q) r.mse_quantile[tau] = acc / n;
  }
  if (scalar) {
    r.pi_length = pi / n;
    r.coverage = static_cast<double>(hits) / n;
  }
  return r;
}

std::vector<std::pair<std::string, double>> EvalReport::metrics() const {
  std::vector<std::pair<std::string, double>> out;
  out.emplace_back("L1", l1);
  out.emplace_back("L2", l2);
  if (mse_mean) out.emplace_back("mse_mean", *mse_mean);
  if (mse_sd) out.emplace_back("mse_sd", *mse_sd);
  for (const auto& [tau, v] : mse_quantile) out.emplace_back(tau_label(tau), v);
  if (pi_length) out.emplace_back("PI", *pi_length);
  if (coverage) out.emplace_back("CP", *coverage);
  return out;
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream head, row;
  head << "method";
  row << r.method;
  for (const auto& [name, v] : r.metrics()) {
    head << ',' << name;
    row << ',' << format_double(v);
  }
  head << ",n_test,K,seed\n";
  row << ',' << r.n_test << ',' << r.K << ',' << r.seed << '\n';
  return head.str() + row.str();
}

std::string report_keyvalue(const EvalReport& r) {
  std::ostringstream os;
  os << "[report]\nmethod = " << r.method << "\nn_test = " << r.n_test << "\nK = " << r.K
     << "\nseed = " << r.seed << "\n\n[metrics]\n";
  for (const auto& [name, v] : r.metrics()) os << name << " = " << format_double(v) << '\n';
  return os.str();
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("silverman_bandwidth: no samples");
  const auto n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sd = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  if (!(sd > 0.0)) return 1.0;
  return 1.06 * sd * std::pow(n, -0.2);
}

Eigen::VectorXd kde_curve(std::span<const double> samples, std::span<const double> grid,
                          double bandwidth) {
  if (samples.empty()) throw std::invalid_argument("kde_curve: no samples");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde_curve: bandwidth must be positive");
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth *
                             std::sqrt(2.0 * boost::math::constants::pi<double>()));
  Eigen::VectorXd out(static_cast<Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (grid[g] - s) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    out(static_cast<Index>(g)) = acc * norm;
  }
  return out;
}

std::vector<double> local_maxima(std::span<const double> grid, const Eigen::VectorXd& density) {
  std::vector<double> peaks;
  for (Index i = 1; i + 1 < density.size(); ++i)
    if (density(i) > density(i - 1) && density(i) >= density(i + 1))
      peaks.push_back(grid[static_cast<std::size_t>(i)]);
  return peaks;
}

std::vector<double> linspace(double lo, double hi, Index count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] =
        count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return g;
}

}  // namespace wgr
