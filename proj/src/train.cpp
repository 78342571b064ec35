#include "wgr/train.hpp"

#include "wgr/metrics.hpp"
#include "wgr/rng.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace wgr {

namespace {

// Random stream ids shared by train() and train_least_squares().
enum Stream : std::uint64_t {
  kBatchStream = 1,
  kNoiseStream = 2,
  kNoiseOneStream = 3,
  kGeneratorInit = 4,
  kCriticInit = 5,
  kValidation = 6,
};

Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix repeat_rows(const Matrix& x, Index times) {
  Matrix out(x.rows() * times, x.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < times; ++j) out.row(i * times + j) = x.row(i);
  return out;
}

std::string describe(const LossRecord& r) {
  std::ostringstream os;
  os << "iteration " << r.iteration << ": L_W=" << r.w_loss << " L_LS=" << r.ls_loss
     << " penalty=" << r.penalty;
  return os.str();
}

bool finite_or_absent(double v) { return std::isnan(v) || std::isfinite(v); }

// Uniform sample of `size` distinct rows via a partial Fisher-Yates shuffle
// of a persistent permutation.
class BatchSampler {
 public:
  BatchSampler(Index n, Index size, std::uint64_t seed)
      : order_(static_cast<std::size_t>(n)), size_(size), rng_(seed) {
    std::iota(order_.begin(), order_.end(), Index{0});
  }

  std::vector<Index> next() {
    const auto n = static_cast<Index>(order_.size());
    for (Index k = 0; k < size_; ++k) {
      std::uniform_int_distribution<Index> pick(k, n - 1);
      std::swap(order_[static_cast<std::size_t>(k)], order_[static_cast<std::size_t>(pick(rng_))]);
    }
    return {order_.begin(), order_.begin() + size_};
  }

 private:
  std::vector<Index> order_;
  Index size_;
  Rng rng_;
};

void gather(const Dataset& ds, const std::vector<Index>& rows, Matrix& X, Matrix& Y) {
  X.resize(static_cast<Index>(rows.size()), ds.x_dim());
  Y.resize(static_cast<Index>(rows.size()), ds.y_dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    X.row(static_cast<Index>(i)) = ds.X.row(rows[i]);
    Y.row(static_cast<Index>(i)) = ds.Y.row(rows[i]);
  }
}

std::vector<Matrix> zeros_like(const std::vector<Matrix>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(Matrix::Zero(p.rows(), p.cols()));
  return out;
}

void check_data(const WgrConfig& cfg, const Dataset& train_set, const Dataset& val_set) {
  cfg.validate();
  train_set.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (cfg.eval_every > 0) {
    if (val_set.size() == 0) throw std::invalid_argument("train: validation enabled but no data");
    if (val_set.x_dim() != train_set.x_dim() || val_set.y_dim() != train_set.y_dim())
      throw std::invalid_argument("train: validation set dimensions differ from training set");
  }
}

// Records validation L2 and keeps the best generator.
void checkpoint(TrainState& state, const WgrConfig& cfg, const Dataset& val_set, LossRecord& rec) {
  const bool last = state.iteration == cfg.iterations;
  if (cfg.eval_every <= 0) {
    if (last) {
      state.best_generator = state.generator;
      state.best_iteration = state.iteration;
    }
    return;
  }
  if (state.iteration % cfg.eval_every != 0 && !last) return;
  rec.val_l2 = validation_l2(state.generator, cfg.noise_dim, val_set, cfg.eval_K,
                             derive_seed(cfg.seed, kValidation));
  if (rec.val_l2 < state.best_val_l2) {
    state.best_val_l2 = rec.val_l2;
    state.best_generator = state.generator;
    state.best_iteration = state.iteration;
  }
}

}  // namespace

TrainingDiverged::TrainingDiverged(Index iteration, const LossRecord& last_finite)
    : std::runtime_error("training diverged at iteration " + std::to_string(iteration) +
                         "; last finite losses at " + describe(last_finite)),
      iteration_(iteration),
      last_(last_finite) {}

void WgrConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("WgrConfig: " + msg); };
  if (lambda_l < 0.0 || lambda_w < 0.0) fail("loss weights must be >= 0");
  if (std::abs(lambda_l + lambda_w - 1.0) > 1e-12) fail("lambda_l + lambda_w must equal 1");
  if (gp_lambda < 0.0) fail("gp_lambda must be >= 0");
  if (lipschitz == LipschitzMode::Clipping && !(clip > 0.0)) fail("clip must be positive");
  if (noise_dim < 1) fail("noise_dim must be >= 1");
  if (J < 1) fail("J must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (iterations < 1) fail("iterations must be >= 1");
  if (critic_steps < 1) fail("critic_steps must be >= 1");
  if (eval_every < 0) fail("eval_every must be >= 0");
  if (eval_K < 1) fail("eval_K must be >= 1");
  if (!(rmsprop.learning_rate > 0.0)) fail("learning rate must be positive");
  if (!(rmsprop.decay >= 0.0 && rmsprop.decay < 1.0)) fail("rmsprop decay must lie in [0, 1)");
  if (!(rmsprop.epsilon > 0.0)) fail("rmsprop epsilon must be positive");
  if (generator_hidden.empty() || critic_hidden.empty()) fail("hidden widths must be non-empty");
}

ad::Var ls_loss(const BoundMlp& generator, const Matrix& X, const Matrix& Y, const Matrix& noise,
                Index J, ad::Tape& tape) {
  const Index n = X.rows();
  if (Y.rows() != n || noise.rows() != n * J)
    throw std::invalid_argument("ls_loss: expected " + std::to_string(n * J) +
                                " noise rows for n=" + std::to_string(n) +
                                ", J=" + std::to_string(J) + ", got " +
                                std::to_string(noise.rows()));
  const ad::Var input = tape.leaf(hcat(repeat_rows(X, J), noise));
  const ad::Var out = apply(generator, input);
  const ad::Var residual = ad::group_mean(out, J) - tape.leaf(Y);
  return (1.0 / static_cast<double>(n)) * ad::sum(ad::square(residual));
}

ad::Var w_loss(const BoundMlp& generator, const BoundMlp& critic, const Matrix& X, const Matrix& Y,
               const Matrix& noise_one, ad::Tape& tape) {
  const Index n = X.rows();
  if (Y.rows() != n || noise_one.rows() != n)
    throw std::invalid_argument("w_loss: X, Y and noise must have the same number of rows");
  const ad::Var x = tape.leaf(X);
  const ad::Var fake = apply(generator, tape.leaf(hcat(X, noise_one)));
  const ad::Var f_fake = apply(critic, ad::concat_cols(x, fake));
  const ad::Var f_real = apply(critic, tape.leaf(hcat(X, Y)));
  return ad::mean(f_fake) - ad::mean(f_real);
}

ad::Var gp_term(const BoundMlp& critic, const Matrix& X, const Matrix& Y, ad::Tape& tape) {
  if (X.rows() != Y.rows()) throw std::invalid_argument("gp_term: X and Y row counts differ");
  const ad::Var z = tape.leaf(hcat(X, Y));
  const ad::Var out = apply(critic, z);
  // Rows are independent, so d(sum f)/dZ holds every per-sample input gradient.
  const ad::Var g = tape.grad_as_graph(ad::sum(out), z);
  return ad::mean(ad::square(ad::add_scalar(ad::row_norm(g), -1.0)));
}

void rmsprop_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                  std::vector<Matrix>& accumulators, const RmsPropConfig& cfg) {
  if (params.size() != grads.size() || params.size() != accumulators.size())
    throw std::invalid_argument("rmsprop_step: parameter, gradient and accumulator counts differ");
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = params[k];
    const Matrix& g = grads[k];
    Matrix& acc = accumulators[k];
    if (g.rows() != p.rows() || g.cols() != p.cols() || acc.rows() != p.rows() ||
        acc.cols() != p.cols())
      throw std::invalid_argument("rmsprop_step: shape mismatch at parameter " + std::to_string(k));
    acc = cfg.decay * acc + (1.0 - cfg.decay) * g.cwiseProduct(g);
    p.array() -= cfg.learning_rate * g.array() / (acc.array().sqrt() + cfg.epsilon);
  }
}

GeneratorGradients generator_gradients(const Mlp& generator, const Mlp& critic, const Matrix& X,
                                       const Matrix& Y, const Matrix& noise, Index J,
                                       const Matrix& noise_one, double lambda_l, double lambda_w) {
  GeneratorGradients out;
  {
    ad::Tape tape;
    const BoundMlp g = bind(generator, tape);
    const ad::Var loss = lambda_l * ls_loss(g, X, Y, noise, J, tape);
    out.least_squares = tape.grad(loss, g.params);
  }
  {
    ad::Tape tape;
    const BoundMlp g = bind(generator, tape);
    const BoundMlp f = bind(critic, tape);
    const ad::Var loss = lambda_w * w_loss(g, f, X, Y, noise_one, tape);
    out.adversarial = tape.grad(loss, g.params);
  }
  return out;
}

MlpSpec generator_spec(const WgrConfig& cfg, Index x_dim, Index y_dim) {
  return MlpSpec{x_dim + cfg.noise_dim, cfg.generator_hidden, y_dim, cfg.activation_slope};
}

MlpSpec critic_spec(const WgrConfig& cfg, Index x_dim, Index y_dim) {
  return MlpSpec{x_dim + y_dim, cfg.critic_hidden, 1, cfg.activation_slope};
}

double validation_l2(const Mlp& generator, Index noise_dim, const Dataset& val_set, Index K,
                     std::uint64_t seed) {
  const TrainedGenerator gen(generator, noise_dim);
  return l1_l2(gen, val_set, K, seed).l2;
}

TrainState train(const WgrConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                 const TrainHooks& hooks) {
  check_data(cfg, train_set, val_set);
  const Index d = train_set.x_dim();
  const Index q = train_set.y_dim();
  const Index m = cfg.noise_dim;
  const Index v = std::min(cfg.batch_size, train_set.size());
  const bool use_ls = cfg.lambda_l > 0.0;
  const bool use_w = cfg.lambda_w > 0.0;

  TrainState state;
  state.generator = init_mlp(generator_spec(cfg, d, q), derive_seed(cfg.seed, kGeneratorInit));
  state.critic = init_mlp(critic_spec(cfg, d, q), derive_seed(cfg.seed, kCriticInit));
  state.generator_acc = zeros_like(state.generator.params());
  state.critic_acc = zeros_like(state.critic.params());

  BatchSampler batches(train_set.size(), v, derive_seed(cfg.seed, kBatchStream));
  Rng noise_rng(derive_seed(cfg.seed, kNoiseStream));
  Rng noise_one_rng(derive_seed(cfg.seed, kNoiseOneStream));
  LossRecord last_finite;

  Matrix X, Y, noise, noise_one;
  for (Index it = 1; it <= cfg.iterations; ++it) {
    LossRecord rec;
    rec.iteration = it;
    gather(train_set, batches.next(), X, Y);
    if (use_ls) noise = standard_normal(v * cfg.J, m, noise_rng);

    // Critic ascent on lambda_w (L_W - lambda * penalty), generator fixed.
    if (use_w) {
      for (Index s = 0; s < cfg.critic_steps; ++s) {
        noise_one = standard_normal(v, m, noise_one_rng);
        ad::Tape tape;
        const BoundMlp g = bind(state.generator, tape);
        const BoundMlp f = bind(state.critic, tape);
        const ad::Var wl = w_loss(g, f, X, Y, noise_one, tape);
        ad::Var objective = wl;
        if (cfg.lipschitz == LipschitzMode::GradientPenalty) {
          const ad::Var pen = gp_term(f, X, Y, tape);
          rec.penalty = pen.scalar();
          objective = wl - cfg.gp_lambda * pen;
        }
        rec.w_loss = wl.scalar();
        const ad::Var loss = (-cfg.lambda_w) * objective;
        if (!std::isfinite(loss.scalar())) throw TrainingDiverged(it, last_finite);
        rmsprop_step(state.critic.params(), tape.grad(loss, f.params), state.critic_acc,
                     cfg.rmsprop);
        if (cfg.lipschitz == LipschitzMode::Clipping) clip_weights(state.critic, cfg.clip);
      }
    }

    // Generator descent on lambda_l L_LS + lambda_w L_W, critic fixed.
    {
      ad::Tape tape;
      const BoundMlp g = bind(state.generator, tape);
      ad::Var loss;
      if (use_ls) {
        const ad::Var ls = ls_loss(g, X, Y, noise, cfg.J, tape);
        rec.ls_loss = ls.scalar();
        loss = cfg.lambda_l * ls;
      }
      if (use_w) {
        const BoundMlp f = bind(state.critic, tape);
        const ad::Var adv = cfg.lambda_w * w_loss(g, f, X, Y, noise_one, tape);
        loss = loss.valid() ? loss + adv : adv;
      }
      if (!std::isfinite(loss.scalar())) throw TrainingDiverged(it, last_finite);
      const auto grads = tape.grad(loss, g.params);
      if (hooks.on_generator_step)
        hooks.on_generator_step(
            GeneratorStepView{it, state.generator, state.critic, X, Y, noise, noise_one, grads});
      rmsprop_step(state.generator.params(), grads, state.generator_acc, cfg.rmsprop);
    }

    if (!finite_or_absent(rec.w_loss) || !finite_or_absent(rec.ls_loss) ||
        !finite_or_absent(rec.penalty) || !state.generator.all_finite())
      throw TrainingDiverged(it, last_finite);

    state.iteration = it;
    checkpoint(state, cfg, val_set, rec);
    state.history.push_back(rec);
    last_finite = rec;
  }
  return state;
}

TrainState train_least_squares(const WgrConfig& cfg, const Dataset& train_set,
                               const Dataset& val_set) {
  check_data(cfg, train_set, val_set);
  const Index v = std::min(cfg.batch_size, train_set.size());

  TrainState state;
  state.generator = init_mlp(generator_spec(cfg, train_set.x_dim(), train_set.y_dim()),
                             derive_seed(cfg.seed, kGeneratorInit));
  state.generator_acc = zeros_like(state.generator.params());

  BatchSampler batches(train_set.size(), v, derive_seed(cfg.seed, kBatchStream));
  Rng noise_rng(derive_seed(cfg.seed, kNoiseStream));
  LossRecord last_finite;

  Matrix X, Y;
  for (Index it = 1; it <= cfg.iterations; ++it) {
    gather(train_set, batches.next(), X, Y);
    const Matrix noise = standard_normal(v * cfg.J, cfg.noise_dim, noise_rng);
    ad::Tape tape;
    const BoundMlp g = bind(state.generator, tape);
    const ad::Var loss = ls_loss(g, X, Y, noise, cfg.J, tape);
    if (!std::isfinite(loss.scalar())) throw TrainingDiverged(it, last_finite);
    rmsprop_step(state.generator.params(), tape.grad(loss, g.params), state.generator_acc,
                 cfg.rmsprop);

    LossRecord rec;
    rec.iteration = it;
    rec.ls_loss = loss.scalar();
    state.iteration = it;
    checkpoint(state, cfg, val_set, rec);
    state.history.push_back(rec);
    last_finite = rec;
  }
  return state;
}

std::vector<std::pair<double, double>> lambda_grid() {
  std::vector<std::pair<double, double>> grid;
  for (int k = 1; k <= 9; ++k)
    grid.emplace_back(static_cast<double>(k) / 10.0, static_cast<double>(10 - k) / 10.0);
  return grid;
}

TraversalResult lambda_traversal(const WgrConfig& base, const Dataset& train_set,
                                 const Dataset& val_set, int threads) {
  if (base.eval_every <= 0)
    throw std::invalid_argument("lambda_traversal: validation must be enabled (eval_every > 0)");
  const auto grid = lambda_grid();
  std::vector<TraversalCell> cells(grid.size());
  std::vector<std::optional<TrainState>> states(grid.size());
  std::vector<WgrConfig> configs(grid.size(), base);

  for (std::size_t k = 0; k < grid.size(); ++k) {
    configs[k].lambda_l = grid[k].first;
    configs[k].lambda_w = grid[k].second;
    configs[k].seed = derive_seed(base.seed, 1000 + k);
    cells[k].lambda_l = grid[k].first;
    cells[k].lambda_w = grid[k].second;
  }

  auto run_cell = [&](std::size_t k) {
    try {
      states[k] = train(configs[k], train_set, val_set);
      cells[k].val_l2 = states[k]->best_val_l2;
      if (!std::isfinite(cells[k].val_l2)) cells[k].error = "non-finite validation L2";
    } catch (const std::exception& e) {
      cells[k].error = e.what();
    }
  };

  if (threads <= 1) {
    for (std::size_t k = 0; k < grid.size(); ++k) run_cell(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < grid.size(); k = next++) run_cell(k);
      });
    for (auto& th : pool) th.join();
  }

  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!cells[k].error.empty()) continue;
    // Grid is ordered by increasing lambda_l, so <= favours the larger one.
    if (!best || cells[k].val_l2 <= cells[*best].val_l2) best = k;
  }
  if (!best) {
    std::ostringstream os;
    os << "lambda_traversal: every run failed:";
    for (const auto& c : cells) os << "\n  (" << c.lambda_l << ", " << c.lambda_w << "): " << c.error;
    throw std::runtime_error(os.str());
  }
  return TraversalResult{configs[*best], std::move(*states[*best]), std::move(cells)};
}

}  // namespace wgr
