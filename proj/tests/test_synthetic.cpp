#include "wgr/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace wgr;

namespace {

const ModelId kAll[] = {ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4,
                        ModelId::M5, ModelId::M6, ModelId::M7, ModelId::M8};

SyntheticModel make(ModelId id) {
  const bool scalar_x = id == ModelId::M3 || id == ModelId::M4 || id == ModelId::M5;
  return SyntheticModel(id, scalar_x ? 1 : 5);
}

RowVector point(Index d, std::initializer_list<double> head) {
  RowVector x = RowVector::Zero(d);
  Index i = 0;
  for (double v : head) x(i++) = v;
  return x;
}

}  // namespace

TEST_CASE("model ids and dimensions") {
  CHECK(parse_model_id("M7") == ModelId::M7);
  CHECK(to_string(ModelId::M2) == "M2");
  CHECK_THROWS_AS(parse_model_id("M9"), std::invalid_argument);
  CHECK(SyntheticModel(ModelId::M1, 100).covariate_dim() == 100);
  CHECK_THROWS_AS(SyntheticModel(ModelId::M1, 7), std::invalid_argument);
  CHECK(SyntheticModel(ModelId::M4, 5).covariate_dim() == 1);
  for (ModelId id : kAll) {
    const SyntheticModel m = make(id);
    const bool bivariate = id == ModelId::M3 || id == ModelId::M4 || id == ModelId::M5;
    CHECK(m.response_dim() == (bivariate ? 2 : 1));
    CHECK(m.has_quantiles() == !bivariate);
  }
}

TEST_CASE("truth examples") {
  const SyntheticModel m1(ModelId::M1, 5);
  const auto t1 = truth(m1, point(5, {1.0}), 0.5);
  CHECK(t1.mean(0) == 2.0);  // 1 + e^0 + sin 0
  CHECK(t1.sd(0) == 1.0);
  CHECK(*t1.quantile == doctest::Approx(2.0).epsilon(1e-12));

  const RowVector x = point(5, {0.3, -0.2, 0.7, 0.1, 0.4});
  CHECK(truth(m1, x).mean(0) ==
        doctest::Approx(0.09 + std::exp(-0.2 + 0.7 / 3.0) + std::sin(0.5)).epsilon(1e-14));

  const SyntheticModel m2(ModelId::M2, 5);
  CHECK(truth(m2, point(5, {})).sd(0) == 0.5);

  const SyntheticModel m8(ModelId::M8, 5);
  const auto t8 = truth(m8, point(5, {1.0}), 0.5);
  CHECK(t8.mean(0) == 0.0);
  CHECK(t8.sd(0) == doctest::Approx(std::sqrt(1.0625)).epsilon(1e-14));
  CHECK(std::abs(*t8.quantile) < 1e-9);

  CHECK_THROWS_AS(truth(m1, x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(truth(m1, x, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(truth(SyntheticModel(ModelId::M3, 1), point(1, {0.0}), 0.5),
                  std::invalid_argument);
}

TEST_CASE("M3 at x = 0 has a centred mixture marginal") {
  const SyntheticModel m(ModelId::M3, 1);
  Rng rng(5);
  const Matrix s = sample_conditional(m, point(1, {0.0}), 100000, rng);
  CHECK(std::abs(s.col(0).mean()) < 0.02);
  CHECK(std::abs(s.col(1).mean()) < 0.02);
}

TEST_CASE("M7 at x = 0: closed-form mean against Monte Carlo") {
  const SyntheticModel m(ModelId::M7, 5);
  const double closed = 5.0 * 0.5 * std::exp(0.125) * (std::exp(-1.0) + std::exp(1.0));
  CHECK(truth(m, point(5, {})).mean(0) == doctest::Approx(closed).epsilon(1e-12));
  Rng rng(17);
  const Matrix s = sample_conditional(m, point(5, {}), 1000000, rng);
  CHECK(std::abs(s.mean() - closed) / closed < 0.01);
}

TEST_CASE("M8 at x1 = 1: mixture moments against Monte Carlo") {
  const SyntheticModel m(ModelId::M8, 5);
  Rng rng(23);
  const Matrix s = sample_conditional(m, point(5, {1.0}), 1000000, rng);
  const double mean = s.mean();
  const double sd = std::sqrt((s.array() - mean).square().mean());
  CHECK(std::abs(mean) < 0.005);
  CHECK(sd == doctest::Approx(1.0308).epsilon(0.005));
}

TEST_CASE("Monte Carlo mean and sd agree with truth within 3 standard errors") {
  const Index n = 100000;
  for (ModelId id : kAll) {
    const SyntheticModel m = make(id);
    Rng xr(derive_seed(31, static_cast<std::uint64_t>(id)));
    const RowVector x = standard_normal(1, m.covariate_dim(), xr);
    Rng rng(derive_seed(37, static_cast<std::uint64_t>(id)));
    const Matrix s = sample_conditional(m, x, n, rng);
    const auto t = truth(m, x);
    for (Index k = 0; k < m.response_dim(); ++k) {
      const auto col = s.col(k).array();
      const double mean = col.mean();
      const double m2 = (col - mean).square().mean();
      const double m4 = (col - mean).square().square().mean();
      const double sd = std::sqrt(m2);
      const double se_mean = sd / std::sqrt(static_cast<double>(n));
      const double se_sd = std::sqrt((m4 - m2 * m2) / static_cast<double>(n)) / (2.0 * sd);
      INFO(to_string(id), " coordinate ", k);
      CHECK(std::abs(mean - t.mean(k)) < 3.0 * se_mean);
      CHECK(std::abs(sd - t.sd(k)) < 3.0 * se_sd);
    }
  }
}

TEST_CASE("quantiles are strictly increasing in tau and match sample quantiles") {
  const double taus[] = {0.05, 0.25, 0.5, 0.75, 0.95};
  for (ModelId id : kAll) {
    const SyntheticModel m = make(id);
    if (!m.has_quantiles()) continue;
    Rng xr(derive_seed(41, static_cast<std::uint64_t>(id)));
    const RowVector x = standard_normal(1, m.covariate_dim(), xr);
    Rng rng(43);
    Matrix s = sample_conditional(m, x, 200000, rng);
    std::vector<double> v(s.data(), s.data() + s.size());
    std::sort(v.begin(), v.end());
    double prev = -INFINITY;
    for (double tau : taus) {
      const double q = *truth(m, x, tau).quantile;
      INFO(to_string(id), " tau ", tau);
      CHECK(q > prev);
      prev = q;
      // The empirical CDF at the true quantile is within a few binomial SEs of tau.
      const double ecdf =
          static_cast<double>(std::upper_bound(v.begin(), v.end(), q) - v.begin()) /
          static_cast<double>(v.size());
      CHECK(std::abs(ecdf - tau) < 4.0 * std::sqrt(tau * (1.0 - tau) / 200000.0));
    }
  }
}

TEST_CASE("sample is deterministic and has the model shape") {
  for (ModelId id : kAll) {
    const SyntheticModel m = make(id);
    const Dataset a = sample(m, 50, 9);
    const Dataset b = sample(m, 50, 9);
    CHECK(a.X == b.X);
    CHECK(a.Y == b.Y);
    CHECK_FALSE(a.Y == sample(m, 50, 10).Y);
    CHECK(a.x_dim() == m.covariate_dim());
    CHECK(a.y_dim() == m.response_dim());
    CHECK(a.X.allFinite());
    CHECK(a.Y.allFinite());
  }
}

TEST_CASE("bisect_quantile on a known CDF") {
  auto cdf = [](double y) { return 0.5 * std::erfc(-y / std::sqrt(2.0)); };
  CHECK(bisect_quantile(cdf, 0.975, -1.0, 1.0) == doctest::Approx(1.959963984540054).epsilon(1e-9));
}
