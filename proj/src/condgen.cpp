#include "wgr/condgen.hpp"

#include "wgr/io_util.hpp"
#include "wgr/rng.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace wgr {

TrainedGenerator::TrainedGenerator(Mlp net, Index noise_dim)
    : net_(std::move(net)), noise_dim_(noise_dim) {
  if (noise_dim_ < 1 || noise_dim_ >= net_.spec().in_dim)
    throw std::invalid_argument("TrainedGenerator: noise dimension " + std::to_string(noise_dim_) +
                                " incompatible with input width " +
                                std::to_string(net_.spec().in_dim));
}

Matrix TrainedGenerator::draw(const RowVector& x, Index K, std::uint64_t seed) const {
  if (x.size() != covariate_dim())
    throw std::invalid_argument("draw: x has dimension " + std::to_string(x.size()) +
                                ", generator expects " + std::to_string(covariate_dim()));
  if (K < 1) throw std::invalid_argument("draw: K must be >= 1");
  Rng rng(seed);
  Matrix input(K, net_.spec().in_dim);
  input.leftCols(x.size()) = x.replicate(K, 1);
  input.rightCols(noise_dim_) = standard_normal(K, noise_dim_, rng);
  return forward(net_, input);
}

Matrix OracleSampler::draw(const RowVector& x, Index K, std::uint64_t seed) const {
  Rng rng(seed);
  return sample_conditional(model_, x, K, rng);
}

void save_generator(const std::filesystem::path& path, const TrainedGenerator& gen) {
  std::ostringstream os;
  os << "wgr-generator 1\nnoise_dim " << gen.noise_dim() << "\n";
  write_mlp(os, gen.net());
  write_file_atomic(path, os.str());
}

TrainedGenerator load_generator(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open generator checkpoint " + path.string());
  std::string header, key;
  std::getline(is, header);
  if (header != "wgr-generator 1")
    throw std::runtime_error("generator checkpoint: unsupported header '" + header + "'");
  Index m = 0;
  is >> key >> m;
  if (key != "noise_dim") throw std::runtime_error("generator checkpoint: missing noise_dim");
  is.ignore(1, '\n');
  return TrainedGenerator(read_mlp(is), m);
}

ConditionalSampleSet draw(const ConditionalSampler& gen, const RowVector& x, Index K,
                          std::uint64_t seed) {
  return ConditionalSampleSet{x, gen.draw(x, K, seed)};
}

RowVector cond_mean(const ConditionalSampleSet& s) { return sample_mean(s.samples); }

RowVector cond_sd(const ConditionalSampleSet& s) { return sample_sd(s.samples); }

double cond_quantile(const ConditionalSampleSet& s, double tau) {
  if (s.samples.cols() != 1)
    throw std::invalid_argument("cond_quantile: response has " + std::to_string(s.samples.cols()) +
                                " coordinates; quantiles need q = 1");
  return empirical_quantile(s.samples.col(0), tau);
}

std::pair<double, double> pred_interval(const ConditionalSampleSet& s, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("pred_interval: level must lie in (0, 1)");
  return {cond_quantile(s, (1.0 - level) / 2.0), cond_quantile(s, (1.0 + level) / 2.0)};
}

}  // namespace wgr
