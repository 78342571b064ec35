#pragma once

// Leaky-ReLU feedforward networks for the generator and the critic.
//
// Layer i maps p_i -> p_{i+1} as x -> W_i x + b_i. With samples stored as
// rows the tape computes X W_i^T + 1 b_i^T. The last layer is affine.

#include "wgr/autodiff.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace wgr {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct MlpSpec {
  Index in_dim = 1;
  std::vector<Index> hidden_widths;
  Index out_dim = 1;
  double activation_slope = 0.2;

  /// Throws std::invalid_argument if any dimension is < 1, hidden_widths is
  /// empty or the slope is outside (0, 1).
  void validate() const;
  /// p_0, p_1, ..., p_{H+1}.
  std::vector<Index> layer_sizes() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

class Mlp {
 public:
  Mlp() = default;
  /// All parameters zero.
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  std::size_t num_layers() const { return params_.size() / 2; }

  /// p_{i+1} x p_i
  Matrix& weight(std::size_t i) { return params_[2 * i]; }
  const Matrix& weight(std::size_t i) const { return params_[2 * i]; }
  /// 1 x p_{i+1}
  Matrix& bias(std::size_t i) { return params_[2 * i + 1]; }
  const Matrix& bias(std::size_t i) const { return params_[2 * i + 1]; }

  /// W_0, b_0, W_1, b_1, ...
  std::vector<Matrix>& params() { return params_; }
  const std::vector<Matrix>& params() const { return params_; }

  Index num_parameters() const;
  bool all_finite() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  MlpSpec spec_;
  std::vector<Matrix> params_;
};

/// He-style init: W ~ N(0, 2/fan_in), b = 0.
Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed);

/// An Mlp whose parameters are recorded as leaves on a tape.
struct BoundMlp {
  const Mlp* net = nullptr;
  std::vector<ad::Var> params;
};

BoundMlp bind(const Mlp& net, ad::Tape& tape);

/// Records the forward pass of `input` (rows are samples) on the tape.
ad::Var apply(const BoundMlp& net, const ad::Var& input);

/// Plain evaluation, no tape.
template <typename Derived>
Matrix forward(const Mlp& net, const Eigen::MatrixBase<Derived>& input) {
  if (input.cols() != net.spec().in_dim)
    throw std::invalid_argument("forward: input has " + std::to_string(input.cols()) +
                                " columns, network expects " +
                                std::to_string(net.spec().in_dim));
  const double slope = net.spec().activation_slope;
  Matrix h = input;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Matrix z = h * net.weight(i).transpose();
    z.rowwise() += net.bias(i).row(0);
    if (i + 1 < net.num_layers())
      h = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    else
      h = std::move(z);
  }
  return h;
}

/// Clamps every weight and bias entry into [-c, c].
void clip_weights(Mlp& net, double c);

/// Largest absolute parameter entry.
double max_abs_parameter(const Mlp& net);

// Checkpoints: versioned text, doubles written with max_digits10 so a
// write/read round trip is bit-exact.
void write_mlp(std::ostream& os, const Mlp& net);
Mlp read_mlp(std::istream& is);
void save_mlp(const std::filesystem::path& path, const Mlp& net);
Mlp load_mlp(const std::filesystem::path& path);

}  // namespace wgr
