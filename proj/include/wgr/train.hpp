#pragma once

// Minimax training of a conditional generator g(x, eta) against a critic
// f(x, y) under the weighted objective
//
//   lambda_w * [ mean_i f(X_i, g(X_i, eta_i0)) - mean_i f(X_i, Y_i) ]
//     + lambda_l * mean_i || Y_i - mean_j g(X_i, eta_ij) ||^2
//
// Each iteration the critic ascends the Wasserstein term minus a gradient
// penalty evaluated at the data points (or is clipped), then the generator
// descends the full objective. NLS and cWGAN are the weight corners
// lambda_w = 0 and lambda_l = 0.

#include "wgr/autodiff.hpp"
#include "wgr/condgen.hpp"
#include "wgr/dataio.hpp"
#include "wgr/nets.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace wgr {

enum class LipschitzMode { GradientPenalty, Clipping };

struct RmsPropConfig {
  double learning_rate = 1e-4;
  double decay = 0.99;
  double epsilon = 1e-8;
};

struct WgrConfig {
  double lambda_l = 0.5;
  double lambda_w = 0.5;
  double gp_lambda = 10.0;
  LipschitzMode lipschitz = LipschitzMode::GradientPenalty;
  double clip = 0.01;
  Index noise_dim = 3;
  Index J = 200;
  Index batch_size = 128;  // clamped to n
  Index iterations = 20000;
  Index critic_steps = 1;
  RmsPropConfig rmsprop;
  std::vector<Index> generator_hidden{32, 16};
  std::vector<Index> critic_hidden{32, 16};
  double activation_slope = 0.2;
  Index eval_every = 500;  // 0 disables validation checkpointing
  Index eval_K = 500;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on any violated constraint.
  void validate() const;
};

struct LossRecord {
  Index iteration = 0;
  // NaN marks a term that was not computed at this iteration (for instance
  // the LS term when lambda_l = 0).
  double w_loss = std::numeric_limits<double>::quiet_NaN();
  double ls_loss = std::numeric_limits<double>::quiet_NaN();
  double penalty = std::numeric_limits<double>::quiet_NaN();
  double val_l2 = std::numeric_limits<double>::quiet_NaN();
};

struct TrainState {
  Mlp generator;
  Mlp critic;
  std::vector<Matrix> generator_acc;
  std::vector<Matrix> critic_acc;
  Index iteration = 0;
  std::vector<LossRecord> history;
  // Checkpoint with the lowest validation L2 (the final one if validation
  // is disabled).
  Mlp best_generator;
  double best_val_l2 = std::numeric_limits<double>::infinity();
  Index best_iteration = 0;

  TrainedGenerator trained(Index noise_dim) const { return TrainedGenerator(best_generator, noise_dim); }
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(Index iteration, const LossRecord& last_finite);
  Index iteration() const { return iteration_; }
  const LossRecord& last_finite() const { return last_; }

 private:
  Index iteration_;
  LossRecord last_;
};

// Loss terms ------------------------------------------------------------------

/// (1/n) sum_i || Y_i - (1/J) sum_j g(X_i, eta_ij) ||^2.
/// `noise` is (n J) x m with the J rows of sample i contiguous.
ad::Var ls_loss(const BoundMlp& generator, const Matrix& X, const Matrix& Y, const Matrix& noise,
                Index J, ad::Tape& tape);

/// (1/n) sum_i f(X_i, g(X_i, eta_i)) - f(X_i, Y_i), `noise_one` is n x m.
ad::Var w_loss(const BoundMlp& generator, const BoundMlp& critic, const Matrix& X, const Matrix& Y,
               const Matrix& noise_one, ad::Tape& tape);

/// (1/n) sum_i (|| grad_(x,y) f(X_i, Y_i) ||_2 - 1)^2, differentiable in the
/// critic parameters.
ad::Var gp_term(const BoundMlp& critic, const Matrix& X, const Matrix& Y, ad::Tape& tape);

/// acc <- decay acc + (1 - decay) g^2;  p <- p - lr g / (sqrt(acc) + eps).
void rmsprop_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                  std::vector<Matrix>& accumulators, const RmsPropConfig& cfg);

/// Generator gradient split into its two weighted parts.
struct GeneratorGradients {
  std::vector<Matrix> least_squares;  // d/dtheta lambda_l L_LS
  std::vector<Matrix> adversarial;    // d/dtheta lambda_w mean f(X, g(X, eta_0))
};

GeneratorGradients generator_gradients(const Mlp& generator, const Mlp& critic, const Matrix& X,
                                       const Matrix& Y, const Matrix& noise, Index J,
                                       const Matrix& noise_one, double lambda_l, double lambda_w);

// Training ----------------------------------------------------------------------

/// What the generator update of one iteration saw.
struct GeneratorStepView {
  Index iteration;
  const Mlp& generator;  // parameters before the update
  const Mlp& critic;
  const Matrix& X;
  const Matrix& Y;
  const Matrix& noise;
  const Matrix& noise_one;
  const std::vector<Matrix>& applied_gradient;
};

struct TrainHooks {
  std::function<void(const GeneratorStepView&)> on_generator_step;
};

MlpSpec generator_spec(const WgrConfig& cfg, Index x_dim, Index y_dim);
MlpSpec critic_spec(const WgrConfig& cfg, Index x_dim, Index y_dim);

TrainState train(const WgrConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                 const TrainHooks& hooks = {});

/// Plain least-squares trainer for the same generator (no critic). Shares
/// the random streams of train(), so lambda_w = 0 runs match it exactly.
TrainState train_least_squares(const WgrConfig& cfg, const Dataset& train_set,
                               const Dataset& val_set);

/// Validation L2 of the generator's conditional mean with K draws.
double validation_l2(const Mlp& generator, Index noise_dim, const Dataset& val_set, Index K,
                     std::uint64_t seed);

// Weight traversal ---------------------------------------------------------------

struct TraversalCell {
  double lambda_l = 0.0;
  double lambda_w = 0.0;
  double val_l2 = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // non-empty if the run diverged
};

struct TraversalResult {
  WgrConfig config;
  TrainState state;
  std::vector<TraversalCell> cells;
};

/// The nine (lambda_l, lambda_w) pairs with one decimal each and both > 0.
std::vector<std::pair<double, double>> lambda_grid();

/// Trains one model per grid pair and keeps the one with the lowest
/// validation L2; ties go to the larger lambda_l. `threads` > 1 trains cells
/// concurrently.
TraversalResult lambda_traversal(const WgrConfig& base, const Dataset& train_set,
                                 const Dataset& val_set, int threads = 1);

}  // namespace wgr
