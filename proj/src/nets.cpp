#include "wgr/nets.hpp"

#include "wgr/io_util.hpp"
#include "wgr/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace wgr {

void MlpSpec::validate() const {
  if (in_dim < 1 || out_dim < 1)
    throw std::invalid_argument("MlpSpec: input and output dimensions must be >= 1");
  if (hidden_widths.empty()) throw std::invalid_argument("MlpSpec: hidden_widths is empty");
  for (Index w : hidden_widths)
    if (w < 1) throw std::invalid_argument("MlpSpec: hidden width must be >= 1");
  if (!(activation_slope > 0.0 && activation_slope < 1.0))
    throw std::invalid_argument("MlpSpec: activation_slope must lie in (0, 1)");
}

std::vector<Index> MlpSpec::layer_sizes() const {
  std::vector<Index> sizes;
  sizes.push_back(in_dim);
  sizes.insert(sizes.end(), hidden_widths.begin(), hidden_widths.end());
  sizes.push_back(out_dim);
  return sizes;
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const auto sizes = spec_.layer_sizes();
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    params_.push_back(Matrix::Zero(sizes[i + 1], sizes[i]));
    params_.push_back(Matrix::Zero(1, sizes[i + 1]));
  }
}

Index Mlp::num_parameters() const {
  Index n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

bool Mlp::all_finite() const {
  for (const auto& p : params_)
    if (!p.allFinite()) return false;
  return true;
}

Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  Mlp net(spec);
  Rng rng(seed);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Matrix& w = net.weight(i);
    const double sd = std::sqrt(2.0 / static_cast<double>(w.cols()));
    w = sd * standard_normal(w.rows(), w.cols(), rng);
  }
  return net;
}

BoundMlp bind(const Mlp& net, ad::Tape& tape) {
  BoundMlp bound;
  bound.net = &net;
  bound.params.reserve(net.params().size());
  for (const auto& p : net.params()) bound.params.push_back(tape.leaf(p));
  return bound;
}

ad::Var apply(const BoundMlp& net, const ad::Var& input) {
  const MlpSpec& spec = net.net->spec();
  if (input.cols() != spec.in_dim)
    throw std::invalid_argument("apply: input has " + std::to_string(input.cols()) +
                                " columns, network expects " + std::to_string(spec.in_dim));
  const std::size_t layers = net.params.size() / 2;
  ad::Var h = input;
  for (std::size_t i = 0; i < layers; ++i) {
    const ad::Var& w = net.params[2 * i];
    const ad::Var& b = net.params[2 * i + 1];
    ad::Var z = ad::add_row(ad::matmul(h, ad::transpose(w)), b);
    h = (i + 1 < layers) ? ad::leaky_relu(z, spec.activation_slope) : z;
  }
  return h;
}

void clip_weights(Mlp& net, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("clip_weights: c must be positive");
  for (auto& p : net.params()) p = p.cwiseMax(-c).cwiseMin(c);
}

double max_abs_parameter(const Mlp& net) {
  double m = 0.0;
  for (const auto& p : net.params())
    if (p.size() > 0) m = std::max(m, p.cwiseAbs().maxCoeff());
  return m;
}

// Checkpoint format:
//   wgr-mlp 1
//   in_dim <n>
//   hidden <w1> <w2> ...
//   out_dim <n>
//   slope <s>
//   param <rows> <cols>      (repeated, W_0 b_0 W_1 b_1 ...)
//   <row-major values, one matrix row per line>

namespace {

double parse_double(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("checkpoint: bad number '" + tok + "'");
  return v;
}

std::string expect_line(std::istream& is, const std::string& key) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing '" + key + "'");
  if (line.rfind(key, 0) != 0)
    throw std::runtime_error("checkpoint: expected '" + key + "', got '" + line + "'");
  return line.substr(key.size());
}

}  // namespace

void write_mlp(std::ostream& os, const Mlp& net) {
  const MlpSpec& s = net.spec();
  os << "wgr-mlp 1\n";
  os << "in_dim " << s.in_dim << "\n";
  os << "hidden";
  for (Index w : s.hidden_widths) os << ' ' << w;
  os << "\nout_dim " << s.out_dim << "\n";
  os << "slope " << format_double(s.activation_slope) << "\n";
  for (const auto& p : net.params()) {
    os << "param " << p.rows() << ' ' << p.cols() << "\n";
    for (Index i = 0; i < p.rows(); ++i) {
      for (Index j = 0; j < p.cols(); ++j) os << (j ? " " : "") << format_double(p(i, j));
      os << "\n";
    }
  }
}

Mlp read_mlp(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != "wgr-mlp 1") throw std::runtime_error("checkpoint: unsupported header '" + header + "'");
  MlpSpec spec;
  spec.in_dim = std::stol(expect_line(is, "in_dim "));
  {
    std::istringstream hs(expect_line(is, "hidden"));
    Index w;
    while (hs >> w) spec.hidden_widths.push_back(w);
  }
  spec.out_dim = std::stol(expect_line(is, "out_dim "));
  spec.activation_slope = parse_double(expect_line(is, "slope "));
  Mlp net(spec);
  for (auto& p : net.params()) {
    std::istringstream ds(expect_line(is, "param "));
    Index r = 0, c = 0;
    ds >> r >> c;
    if (r != p.rows() || c != p.cols())
      throw std::runtime_error("checkpoint: parameter shape does not match spec");
    for (Index i = 0; i < r; ++i) {
      std::string line;
      if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated parameters");
      std::istringstream ls(line);
      std::string tok;
      for (Index j = 0; j < c; ++j) {
        if (!(ls >> tok)) throw std::runtime_error("checkpoint: short parameter row");
        p(i, j) = parse_double(tok);
      }
    }
  }
  return net;
}

void save_mlp(const std::filesystem::path& path, const Mlp& net) {
  std::ostringstream os;
  write_mlp(os, net);
  write_file_atomic(path, os.str());
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_mlp(is);
}

}  // namespace wgr
