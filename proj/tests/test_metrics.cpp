#include "wgr/metrics.hpp"
#include "wgr/rng.hpp"

#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

using namespace wgr;

namespace {

/// Returns the stored response row for the matching covariate row, K times.
class LookupSampler final : public ConditionalSampler {
 public:
  explicit LookupSampler(Dataset ds) : ds_(std::move(ds)) {}
  Index covariate_dim() const override { return ds_.x_dim(); }
  Index response_dim() const override { return ds_.y_dim(); }
  Matrix draw(const RowVector& x, Index K, std::uint64_t) const override {
    for (Index i = 0; i < ds_.size(); ++i)
      if (ds_.X.row(i) == x) return ds_.Y.row(i).replicate(K, 1);
    throw std::logic_error("unknown covariate");
  }

 private:
  Dataset ds_;
};

class ConstantSampler final : public ConditionalSampler {
 public:
  ConstantSampler(Index d, RowVector value) : d_(d), value_(std::move(value)) {}
  Index covariate_dim() const override { return d_; }
  Index response_dim() const override { return value_.size(); }
  Matrix draw(const RowVector&, Index K, std::uint64_t) const override {
    return value_.replicate(K, 1);
  }

 private:
  Index d_;
  RowVector value_;
};

Dataset test_set(ModelId id, Index d, Index n, std::uint64_t seed) {
  return sample(SyntheticModel(id, d), n, seed);
}

double normal_pdf(double x, double sd) {
  return boost::math::pdf(boost::math::normal(0.0, sd), x);
}

double trapezoid(std::span<const double> grid, const Eigen::VectorXd& f) {
  double area = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    area += 0.5 * (grid[i] - grid[i - 1]) *
            (f(static_cast<Index>(i)) + f(static_cast<Index>(i - 1)));
  return area;
}

}  // namespace

TEST_CASE("l1_l2 examples") {
  const Dataset ds = test_set(ModelId::M2, 5, 20, 1);
  const auto exact = l1_l2(LookupSampler(ds), ds, 1, 0);
  CHECK(exact.l1 == 0.0);
  CHECK(exact.l2 == 0.0);

  Dataset one = make_dataset(Matrix::Zero(1, 2), Matrix::Constant(1, 1, 3.0));
  const auto r = l1_l2(ConstantSampler(2, RowVector::Constant(1, 1.0)), one, 10, 0);
  CHECK(r.l1 == 2.0);
  CHECK(r.l2 == 4.0);

  // Euclidean norm of a q = 2 residual.
  Dataset two = make_dataset(Matrix::Zero(1, 1), (Matrix(1, 2) << 3.0, 4.0).finished());
  const auto r2 = l1_l2(ConstantSampler(1, RowVector::Zero(2)), two, 5, 0);
  CHECK(r2.l1 == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(r2.l2 == doctest::Approx(25.0).epsilon(1e-15));

  CHECK_THROWS_AS(l1_l2(ConstantSampler(3, RowVector::Zero(1)), one, 5, 0), std::invalid_argument);
}

TEST_CASE("l1_l2 against a brute-force loop, and L1^2 <= L2") {
  const SyntheticModel m(ModelId::M1, 5);
  const Dataset ds = test_set(ModelId::M1, 5, 50, 2);
  const OracleSampler gen(m);
  const auto r = l1_l2(gen, ds, 40, 77);
  double l1 = 0.0, l2 = 0.0;
  for (Index i = 0; i < ds.size(); ++i) {
    const Matrix s = gen.draw(ds.X.row(i), 40, derive_seed(77, static_cast<std::uint64_t>(i)));
    double mean = 0.0;
    for (Index k = 0; k < 40; ++k) mean += s(k, 0);
    mean /= 40.0;
    const double res = ds.Y(i, 0) - mean;
    l1 += std::abs(res);
    l2 += res * res;
  }
  CHECK(std::abs(r.l1 - l1 / 50.0) < 1e-12);
  CHECK(std::abs(r.l2 - l2 / 50.0) < 1e-12);
  CHECK(r.l1 * r.l1 <= r.l2);
  CHECK(r.l2 >= 0.0);
}

TEST_CASE("mse_suite examples") {
  SUBCASE("oracle generator for M8") {
    const SyntheticModel m(ModelId::M8, 5);
    const Dataset ds = test_set(ModelId::M8, 5, 20, 4);
    const auto r = mse_suite(OracleSampler(m), m, ds.X, 10000, {}, 11);
    CHECK(r.mse_mean < 1e-3);
    CHECK(r.mse_sd < 1e-3);
  }
  SUBCASE("constant zero generator on M1") {
    const SyntheticModel m(ModelId::M1, 5);
    const Dataset ds = test_set(ModelId::M1, 5, 25, 5);
    const double taus[] = {0.5};
    const auto r = mse_suite(ConstantSampler(5, RowVector::Zero(1)), m, ds.X, 4, taus, 1);
    double mean_sq = 0.0, q_sq = 0.0;
    for (Index i = 0; i < ds.size(); ++i) {
      const auto t = truth(m, ds.X.row(i), 0.5);
      mean_sq += t.mean(0) * t.mean(0);
      q_sq += *t.quantile * *t.quantile;
    }
    CHECK(r.mse_mean == doctest::Approx(mean_sq / 25.0).epsilon(1e-12));
    CHECK(r.mse_sd == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.mse_quantile.at(0.5) == doctest::Approx(q_sq / 25.0).epsilon(1e-12));
  }
  SUBCASE("quantiles of a bivariate model") {
    const SyntheticModel m(ModelId::M4, 1);
    const double taus[] = {0.5};
    CHECK_THROWS_AS(mse_suite(OracleSampler(m), m, Matrix::Zero(3, 1), 10, taus, 0),
                    std::invalid_argument);
    const auto r = mse_suite(OracleSampler(m), m, Matrix::Zero(3, 1), 10, {}, 0);
    CHECK(r.mse_mean >= 0.0);
    CHECK(r.mse_quantile.empty());
  }
}

TEST_CASE("oracle coverage") {
  const SyntheticModel m(ModelId::M1, 5);
  const Dataset ds = test_set(ModelId::M1, 5, 1000, 6);
  const auto r = pi_cp(OracleSampler(m), ds, 500, 0.95, 12);
  const double se = std::sqrt(0.95 * 0.05 / 1000.0);
  CHECK(std::abs(r.coverage - 0.95) < 3.0 * se);
  CHECK(std::abs(r.pi_length - 3.92) < 0.1);

  const auto flat = pi_cp(ConstantSampler(5, RowVector::Zero(1)), ds, 10, 0.95, 0);
  CHECK(flat.pi_length == 0.0);
  CHECK(flat.coverage == 0.0);

  const Dataset biv = test_set(ModelId::M3, 1, 5, 1);
  CHECK_THROWS_AS(pi_cp(OracleSampler(SyntheticModel(ModelId::M3, 1)), biv, 10, 0.95, 0),
                  std::invalid_argument);
}

TEST_CASE("evaluate agrees with the individual metrics") {
  const SyntheticModel m(ModelId::M1, 5);
  const Dataset ds = test_set(ModelId::M1, 5, 40, 7);
  const OracleSampler gen(m);
  EvalOptions opts;
  opts.K = 60;
  opts.seed = 99;
  const EvalReport r = evaluate(gen, ds, m, opts, "ORACLE");
  const auto ll = l1_l2(gen, ds, 60, 99);
  const auto ms = mse_suite(gen, m, ds.X, 60, opts.taus, 99);
  const auto pc = pi_cp(gen, ds, 60, 0.95, 99);
  CHECK(r.l1 == ll.l1);
  CHECK(r.l2 == ll.l2);
  CHECK(*r.mse_mean == ms.mse_mean);
  CHECK(*r.mse_sd == ms.mse_sd);
  CHECK(r.mse_quantile == ms.mse_quantile);
  CHECK(*r.pi_length == pc.pi_length);
  CHECK(*r.coverage == pc.coverage);
  CHECK(r.n_test == 40);
  for (const auto& [name, v] : r.metrics()) CHECK(v >= 0.0);
  CHECK(*r.coverage <= 1.0);

  const EvalReport again = evaluate(gen, ds, m, opts, "ORACLE");
  CHECK(again.metrics() == r.metrics());

  const EvalReport plain = evaluate(gen, ds, std::nullopt, opts, "ORACLE");
  CHECK_FALSE(plain.mse_mean.has_value());
  CHECK(plain.mse_quantile.empty());
  CHECK(plain.coverage.has_value());

  const SyntheticModel biv(ModelId::M5, 1);
  const EvalReport r5 =
      evaluate(OracleSampler(biv), test_set(ModelId::M5, 1, 10, 2), biv, opts, "ORACLE");
  CHECK(r5.mse_quantile.empty());
  CHECK_FALSE(r5.pi_length.has_value());
  CHECK(r5.mse_sd.has_value());
}

TEST_CASE("report serialization") {
  EvalReport r;
  r.method = "WGR";
  r.l1 = 0.5;
  r.l2 = 0.25;
  r.mse_mean = 0.125;
  r.mse_quantile[0.05] = 0.75;
  r.coverage = 0.9;
  r.n_test = 3;
  r.K = 7;
  r.seed = 11;
  CHECK(report_csv(r) ==
        "method,L1,L2,mse_mean,mse_q0.05,CP,n_test,K,seed\n"
        "WGR,0.5,0.25,0.125,0.75,0.9,3,7,11\n");
  const std::string kv = report_keyvalue(r);
  CHECK(kv.find("method = WGR") != std::string::npos);
  CHECK(kv.find("mse_q0.05 = 0.75") != std::string::npos);
  CHECK(kv.find("PI") == std::string::npos);
}

TEST_CASE("kde_curve examples") {
  const std::vector<double> grid = linspace(-6.0, 6.0, 241);
  SUBCASE("one kernel") {
    const double h = 0.7;
    const double at_zero[] = {0.0};
    const Eigen::VectorXd f = kde_curve(at_zero, grid, h);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(std::abs(f(static_cast<Index>(i)) - normal_pdf(grid[i], h)) < 1e-14);
  }
  SUBCASE("symmetric pair") {
    const double pair[] = {-1.0, 1.0};
    const Eigen::VectorXd f = kde_curve(pair, grid, 0.4);
    double asym = 0.0;
    for (Index i = 0; i < f.size(); ++i) asym = std::max(asym, std::abs(f(i) - f(f.size() - 1 - i)));
    CHECK(asym < 1e-12);
    const auto peaks = local_maxima(grid, f);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0] == doctest::Approx(-1.0).epsilon(0.05));
    CHECK(peaks[1] == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("standard normal samples") {
    Rng rng(8);
    const Matrix z = standard_normal(100000, 1, rng);
    const std::span<const double> s(z.data(), static_cast<std::size_t>(z.size()));
    const double h = silverman_bandwidth(s);
    const Eigen::VectorXd f = kde_curve(s, grid, h);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      sup = std::max(sup, std::abs(f(static_cast<Index>(i)) - normal_pdf(grid[i], 1.0)));
    CHECK(sup < 0.01);
    CHECK(std::abs(trapezoid(grid, f) - 1.0) < 0.01);
    const auto peaks = local_maxima(grid, f);
    CHECK(std::count_if(peaks.begin(), peaks.end(), [&](double p) {
            return normal_pdf(p, 1.0) > 0.05;
          }) == 1);
  }
  SUBCASE("errors") {
    const double one[] = {0.0};
    CHECK_THROWS_AS(kde_curve({}, grid, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(kde_curve(one, grid, 0.0), std::invalid_argument);
  }
}

TEST_CASE("silverman_bandwidth") {
  const double v[] = {1.0, 2.0, 3.0, 4.0, 5.0};
  // Sample SD sqrt(2.5).
  CHECK(silverman_bandwidth(v) ==
        doctest::Approx(1.06 * std::sqrt(2.5) * std::pow(5.0, -0.2)).epsilon(1e-14));
  const double flat[] = {2.0, 2.0, 2.0};
  CHECK(silverman_bandwidth(flat) == 1.0);
  CHECK_THROWS_AS(silverman_bandwidth({}), std::invalid_argument);
}

TEST_CASE("linspace and local_maxima") {
  const auto g = linspace(0.0, 1.0, 5);
  CHECK(g == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(linspace(2.0, 3.0, 1) == std::vector<double>{2.0});
  Eigen::VectorXd d(5);
  d << 0.0, 1.0, 0.5, 2.0, 1.0;
  CHECK(local_maxima(g, d) == std::vector<double>{0.25, 0.75});
  Eigen::VectorXd mono(5);
  mono << 0.0, 1.0, 2.0, 3.0, 4.0;
  CHECK(local_maxima(g, mono).empty());
}
