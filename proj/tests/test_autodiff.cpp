#include "wgr/autodiff.hpp"
#include "wgr/nets.hpp"
#include "wgr/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <functional>

using namespace wgr;
using ad::Tape;
using ad::Var;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// FD-checks one unary primitive through loss = sum(op(x) .* R).
void check_unary(const std::function<Var(const Var&)>& op, Matrix x, std::uint64_t seed) {
  Rng rng(seed);
  Tape probe;
  const Var shape = op(probe.leaf(x));
  const Matrix R = standard_normal(shape.rows(), shape.cols(), rng);
  Tape t;
  const Var v = t.leaf(x);
  const Var loss = ad::sum(ad::mul(op(v), t.leaf(R)));
  const Matrix g = t.grad(loss, v);
  const Matrix fd = oracle::fd_gradient(x, [&] {
    Tape u;
    const Var w = u.leaf(x);
    return ad::sum(ad::mul(op(w), u.leaf(R))).scalar();
  });
  CHECK(oracle::max_rel_error(g, fd) < 1e-5);
}

}  // namespace

TEST_CASE("forward examples") {
  Tape t;
  const Var x = t.leaf(mat({{-1.0, 2.0}}));
  const Matrix y = ad::leaky_relu(x, 0.2).value();
  CHECK(y(0, 0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(y(0, 1) == 2.0);

  const Var a = t.leaf(Matrix::Ones(2, 3));
  const Var b = t.leaf(Matrix::Ones(3, 1));
  const Var c = ad::matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 1);

  CHECK(ad::sum(ad::square(t.leaf(mat({{3.0, 4.0}})))).scalar() == 25.0);
}

TEST_CASE("first-order examples") {
  Tape t;
  const Var x = t.leaf(mat({{3.0}}));
  CHECK(t.grad(ad::sum(ad::square(x)), x)(0, 0) == 6.0);

  const Var u = t.leaf(mat({{-1.0}}));
  CHECK(t.grad(ad::sum(ad::leaky_relu(u, 0.2)), u)(0, 0) == 0.2);

  // The kink takes the negative-side slope.
  const Var z = t.leaf(mat({{0.0}}));
  CHECK(t.grad(ad::sum(ad::leaky_relu(z, 0.2)), z)(0, 0) == 0.2);

  // Norm of a zero row has derivative zero rather than NaN.
  const Var r = t.leaf(Matrix::Zero(2, 3));
  const Matrix g = t.grad(ad::sum(ad::row_norm(r)), r);
  CHECK(g.isZero(0.0));
}

TEST_CASE("every primitive matches central differences") {
  Rng rng(11);
  const Matrix x = standard_normal(3, 4, rng);
  const Matrix y = standard_normal(3, 4, rng);
  const Matrix pos = x.array().abs() + 0.5;
  const Matrix w = standard_normal(4, 2, rng);
  const Matrix row = standard_normal(1, 4, rng);
  std::uint64_t s = 100;

  check_unary([&](const Var& v) { return v + v.tape()->leaf(y); }, x, s++);
  check_unary([&](const Var& v) { return v.tape()->leaf(y) - v; }, x, s++);
  check_unary([&](const Var& v) { return ad::mul(v, v.tape()->leaf(y)); }, x, s++);
  check_unary([&](const Var& v) { return 1.7 * v; }, x, s++);
  check_unary([&](const Var& v) { return ad::add_scalar(v, -0.3); }, x, s++);
  check_unary([&](const Var& v) { return ad::matmul(v, v.tape()->leaf(w)); }, x, s++);
  check_unary([&](const Var& v) { return ad::matmul(v.tape()->leaf(w.transpose()), ad::transpose(v)); },
              x, s++);
  check_unary([&](const Var& v) { return ad::transpose(v); }, x, s++);
  check_unary([&](const Var& v) { return ad::leaky_relu(v, 0.2); }, x, s++);
  check_unary([&](const Var& v) { return ad::square(v); }, x, s++);
  check_unary([&](const Var& v) { return ad::sqrt(v); }, pos, s++);
  check_unary([&](const Var& v) { return ad::safe_recip(v); }, pos, s++);
  check_unary([&](const Var& v) { return ad::abs(v); }, x, s++);
  check_unary([&](const Var& v) { return ad::sum(v); }, x, s++);
  check_unary([&](const Var& v) { return ad::col_sum(v); }, x, s++);
  check_unary([&](const Var& v) { return ad::row_sum(v); }, x, s++);
  check_unary([&](const Var& v) { return ad::add_row(v, v.tape()->leaf(row)); }, x, s++);
  check_unary([&](const Var& v) { return ad::add_row(v.tape()->leaf(x), ad::col_sum(v)); }, y, s++);
  check_unary([&](const Var& v) { return ad::broadcast_rows(ad::col_sum(v), 5); }, x, s++);
  check_unary([&](const Var& v) { return ad::broadcast_cols(ad::row_sum(v), 2); }, x, s++);
  check_unary([&](const Var& v) { return v.tape()->broadcast_scalar(ad::sum(v), 2, 3); }, x, s++);
  check_unary([&](const Var& v) { return ad::concat_cols(v, ad::square(v)); }, x, s++);
  check_unary([&](const Var& v) { return ad::slice_cols(v, 1, 2); }, x, s++);
  check_unary([&](const Var& v) { return v.tape()->pad_cols(v, 1, 6); }, x, s++);
  check_unary([&](const Var& v) { return ad::group_mean(v, 3); }, x, s++);
  check_unary([&](const Var& v) { return ad::group_repeat(v, 2); }, x, s++);
  check_unary([&](const Var& v) { return ad::row_norm(v); }, x, s++);
}

TEST_CASE("random three-layer MLP: parameter and input gradients") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Mlp net = init_mlp(MlpSpec{4, {8, 6}, 2, 0.2}, seed);
    Rng rng(derive_seed(seed, 9));
    Matrix X = standard_normal(5, 4, rng);
    const Matrix R = standard_normal(5, 2, rng);

    auto loss_value = [&] { return (forward(net, X).array() * R.array()).sum(); };
    Tape t;
    const BoundMlp b = bind(net, t);
    const Var xin = t.leaf(X);
    const Var loss = ad::sum(ad::mul(apply(b, xin), t.leaf(R)));
    std::vector<Var> wrt = b.params;
    wrt.push_back(xin);
    const auto grads = t.grad(loss, wrt);
    for (std::size_t k = 0; k < net.params().size(); ++k)
      CHECK(oracle::max_rel_error(grads[k], oracle::fd_gradient(net.params()[k], loss_value)) < 1e-5);
    CHECK(oracle::max_rel_error(grads.back(), oracle::fd_gradient(X, loss_value)) < 1e-5);
  }
}

TEST_CASE("second-order examples") {
  {
    Tape t;
    const Var x = t.leaf(mat({{2.0}}));
    const Var f = ad::sum(ad::mul(ad::mul(x, x), x));
    const Var df = t.grad_as_graph(f, x);  // 3x^2
    CHECK(df.scalar() == 12.0);
    CHECK(t.grad(ad::sum(df), x)(0, 0) == 12.0);  // 6x
  }
  {
    Tape t;
    const Var x = t.leaf(mat({{0.7}}));
    const Var y = t.leaf(mat({{-1.3}}));
    const Var dx = t.grad_as_graph(ad::sum(ad::mul(x, y)), x);
    CHECK(dx.scalar() == -1.3);
    CHECK(t.grad(ad::sum(dx), y)(0, 0) == 1.0);
  }
}

TEST_CASE("penalty gradient through double backprop matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Mlp f = init_mlp(MlpSpec{3, {8, 8}, 1, 0.2}, seed);
    Rng rng(derive_seed(seed, 3));
    const Matrix Z = standard_normal(6, 3, rng);

    auto penalty = [&] {
      return oracle::gp_term(f, Z.leftCols(2), Z.rightCols(1));
    };
    Tape t;
    const BoundMlp b = bind(f, t);
    const Var z = t.leaf(Z);
    const Var g = t.grad_as_graph(ad::sum(apply(b, z)), z);
    const Var P = ad::mean(ad::square(ad::add_scalar(ad::row_norm(g), -1.0)));
    CHECK(P.scalar() == doctest::Approx(penalty()).epsilon(1e-12));
    const auto grads = t.grad(P, b.params);
    for (std::size_t k = 0; k < f.params().size(); ++k)
      CHECK(oracle::max_rel_error(grads[k], oracle::fd_gradient(f.params()[k], penalty)) < 1e-4);
  }
}

TEST_CASE("double backprop agrees with finite differences of the first-order gradient") {
  Mlp f = init_mlp(MlpSpec{3, {16, 16}, 1, 0.2}, 21);
  Rng rng(5);
  Matrix Z = standard_normal(4, 3, rng);
  // h(Z) = sum over entries of d(sum f)/dZ; its gradient is a Hessian row sum.
  auto h = [&] {
    Tape u;
    const BoundMlp b = bind(f, u);
    const Var z = u.leaf(Z);
    return u.grad(ad::sum(ad::square(apply(b, z))), z).sum();
  };
  Tape t;
  const BoundMlp b = bind(f, t);
  const Var z = t.leaf(Z);
  const Var g = t.grad_as_graph(ad::sum(ad::square(apply(b, z))), z);
  const Matrix second = t.grad(ad::sum(g), z);
  CHECK(oracle::max_rel_error(second, oracle::fd_gradient(Z, h)) < 1e-4);
}

TEST_CASE("replaying a backward pass leaves first-order gradients unchanged") {
  Mlp f = init_mlp(MlpSpec{3, {5}, 1, 0.2}, 2);
  Rng rng(8);
  Tape t;
  const BoundMlp b = bind(f, t);
  const Var z = t.leaf(standard_normal(4, 3, rng));
  const Var out = ad::sum(apply(b, z));
  const auto before = t.grad(out, b.params);
  const Matrix value_before = out.value();
  t.grad_as_graph(out, z);
  const auto after = t.grad(out, b.params);
  for (std::size_t k = 0; k < before.size(); ++k) CHECK(before[k] == after[k]);
  CHECK(out.value() == value_before);
}

TEST_CASE("gradients are linear in the root") {
  Rng rng(4);
  Tape t;
  const Var x = t.leaf(standard_normal(3, 3, rng));
  const Var f = ad::sum(ad::square(x));
  const Var g = ad::sum(ad::leaky_relu(x, 0.2));
  const Matrix lhs = t.grad(2.0 * f + (-3.0) * g, x);
  const Matrix rhs = 2.0 * t.grad(f, x) - 3.0 * t.grad(g, x);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("identical tapes give bit-identical gradients") {
  auto run = [] {
    Mlp f = init_mlp(MlpSpec{4, {16, 8}, 1, 0.2}, 77);
    Rng rng(3);
    Tape t;
    const BoundMlp b = bind(f, t);
    const Var z = t.leaf(standard_normal(32, 4, rng));
    const Var g = t.grad_as_graph(ad::sum(apply(b, z)), z);
    return t.grad(ad::mean(ad::square(ad::row_norm(g))), b.params);
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("errors") {
  Tape t;
  const Var a = t.leaf(Matrix::Ones(2, 3));
  const Var b = t.leaf(Matrix::Ones(2, 2));
  CHECK_THROWS_WITH_AS(ad::matmul(a, b), "autodiff: shape mismatch in matmul: 2x3 vs 2x2",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(a + b, "autodiff: shape mismatch in add: 2x3 vs 2x2", std::invalid_argument);
  CHECK_THROWS_AS(t.grad(a, a), std::invalid_argument);

  const Var x = t.leaf(Matrix::Ones(1, 2));
  const Var f = ad::sum(ad::square(ad::abs(x)));
  CHECK(t.grad(f, x) == 2.0 * Matrix::Ones(1, 2));
  CHECK_THROWS_WITH_AS(t.grad_as_graph(f, x), doctest::Contains("'abs'"), std::invalid_argument);

  Tape other;
  CHECK_THROWS_AS(other.grad(f, x), std::invalid_argument);
}
