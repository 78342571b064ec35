#include "wgr/experiment.hpp"

#include "wgr/condgen.hpp"
#include "wgr/io_util.hpp"
#include "wgr/rng.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace wgr {

namespace pt = boost::property_tree;

namespace {

// Per-replication stream ids.
enum RepStream : std::uint64_t {
  kTrainData = 11,
  kValData = 12,
  kTestData = 13,
  kSplit = 14,
  kTraining = 20,
  kEvaluation = 30,
  kKde = 31,
};

std::uint64_t rep_seed(const ExperimentConfig& cfg, Index rep) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  if (text.find_first_not_of(" \t") == std::string::npos) return out;
  for (const auto& f : split_trim(text, ',')) {
    std::istringstream is(f);
    T v{};
    if (!(is >> v) || !is.eof())
      throw std::invalid_argument("config: cannot parse list element '" + f + "'");
    out.push_back(v);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: expected a boolean, got '" + s + "'");
}

std::string csv_value(double v) { return std::isnan(v) ? "" : format_double(v); }

std::string loss_csv(const TrainState& state) {
  std::ostringstream os;
  os << "iteration,w_loss,ls_loss,penalty,val_l2\n";
  for (const auto& r : state.history)
    os << r.iteration << ',' << csv_value(r.w_loss) << ',' << csv_value(r.ls_loss) << ','
       << csv_value(r.penalty) << ',' << csv_value(r.val_l2) << '\n';
  return os.str();
}

std::string pi_plot_csv(const ConditionalSampler& gen, const Dataset& test, const EvalOptions& eval) {
  struct Row {
    double y, lo, hi, mean;
  };
  std::vector<Row> rows;
  for (Index i = 0; i < test.size(); ++i) {
    ConditionalSampleSet s =
        draw(gen, test.X.row(i), eval.K, derive_seed(eval.seed, static_cast<std::uint64_t>(i)));
    const auto [lo, hi] = pred_interval(s, eval.level);
    rows.push_back({test.Y(i, 0), lo, hi, cond_mean(s)(0)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.y < b.y; });
  std::ostringstream os;
  os << "rank,y,lower,upper,mean\n";
  for (std::size_t k = 0; k < rows.size(); ++k)
    os << k << ',' << format_double(rows[k].y) << ',' << format_double(rows[k].lo) << ','
       << format_double(rows[k].hi) << ',' << format_double(rows[k].mean) << '\n';
  return os.str();
}

std::string kde_csv(const Matrix& samples, Index grid_points) {
  const Index q = samples.cols();
  std::vector<std::vector<double>> grids, dens;
  for (Index c = 0; c < q; ++c) {
    std::vector<double> col(samples.col(c).data(), samples.col(c).data() + samples.rows());
    const double h = silverman_bandwidth(col);
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    auto grid = linspace(*mn - 3.0 * h, *mx + 3.0 * h, grid_points);
    const Eigen::VectorXd d = kde_curve(col, grid, h);
    dens.emplace_back(d.data(), d.data() + d.size());
    grids.push_back(std::move(grid));
  }
  std::ostringstream os;
  for (Index c = 0; c < q; ++c)
    os << (c ? "," : "") << "grid_y" << c + 1 << ",density_y" << c + 1;
  os << '\n';
  for (Index g = 0; g < grid_points; ++g) {
    for (Index c = 0; c < q; ++c)
      os << (c ? "," : "") << format_double(grids[c][g]) << ',' << format_double(dens[c][g]);
    os << '\n';
  }
  return os.str();
}

std::string traversal_csv(const std::vector<TraversalCell>& cells) {
  std::ostringstream os;
  os << "lambda_l,lambda_w,val_l2,error\n";
  for (const auto& c : cells) {
    std::string err = c.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << format_double(c.lambda_l) << ',' << format_double(c.lambda_w) << ','
       << csv_value(c.val_l2) << ',' << err << '\n';
  }
  return os.str();
}

std::optional<SyntheticModel> synthetic_model(const ExperimentConfig& cfg) {
  if (!cfg.data.synthetic) return std::nullopt;
  return SyntheticModel(cfg.data.model, cfg.data.dim);
}

MethodRun run_method(const ExperimentConfig& cfg, Method method, Index rep, const Splits& data) {
  MethodRun out{method, rep, std::nullopt, {}};
  const std::string tag = to_string(method) + "_" + std::to_string(rep);
  const auto& dir = cfg.out_dir;
  try {
    WgrConfig wcfg = method_config(cfg, method, rep);
    TrainState state;
    if (method == Method::NLS) {
      state = train_least_squares(wcfg, data.train, data.val);
    } else if (method == Method::WGR && cfg.traverse_lambda) {
      auto result = lambda_traversal(wcfg, data.train, data.val, 1);
      write_file_atomic(dir / ("lambda_" + std::to_string(rep) + ".csv"), traversal_csv(result.cells));
      wcfg = result.config;
      state = std::move(result.state);
    } else {
      state = train(wcfg, data.train, data.val);
    }
    write_file_atomic(dir / ("loss_" + tag + ".csv"), loss_csv(state));

    const TrainedGenerator gen = state.trained(wcfg.noise_dim);
    save_generator(dir / ("gen_" + tag + ".ckpt"), gen);
    if (method != Method::NLS) save_mlp(dir / ("critic_" + tag + ".ckpt"), state.critic);

    EvalOptions eval = cfg.eval;
    eval.seed = derive_seed(rep_seed(cfg, rep), kEvaluation);
    EvalReport report = evaluate(gen, data.test, synthetic_model(cfg), eval, to_string(method));
    write_file_atomic(dir / ("report_" + tag + ".csv"), report_csv(report));
    write_file_atomic(dir / ("report_" + tag + ".ini"), report_keyvalue(report));

    if (rep == 0) {
      if (data.test.y_dim() == 1) {
        write_file_atomic(dir / ("pi_plot_" + to_string(method) + ".csv"),
                          pi_plot_csv(gen, data.test, eval));
      } else {
        const std::uint64_t kde_seed = derive_seed(rep_seed(cfg, rep), kKde);
        const Matrix s = gen.draw(data.test.X.row(0), cfg.kde_samples, kde_seed);
        write_file_atomic(dir / ("kde_" + to_string(method) + "_0.csv"), kde_csv(s, cfg.kde_grid));
      }
    }
    out.report = std::move(report);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::NLS: return "NLS";
    case Method::cWGAN: return "cWGAN";
    case Method::WGR: return "WGR";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "NLS") return Method::NLS;
  if (name == "cWGAN") return Method::cWGAN;
  if (name == "WGR") return Method::WGR;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (NLS, cWGAN, WGR)");
}

SweepAxis parse_axis(std::string_view name) {
  if (name == "m" || name == "noise_dim") return SweepAxis::NoiseDim;
  if (name == "J") return SweepAxis::J;
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "' (m or J)");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (replications < 1) fail("replications must be >= 1");
  if (methods.empty()) fail("method list is empty");
  if (threads < 1) fail("threads must be >= 1");
  if (eval.K < 1) fail("eval K must be >= 1");
  if (!(eval.level > 0.0 && eval.level < 1.0)) fail("eval level must lie in (0, 1)");
  for (double t : eval.taus)
    if (!(t > 0.0 && t < 1.0)) fail("every tau must lie in (0, 1)");
  if (kde_samples < 1 || kde_grid < 2) fail("kde_samples must be >= 1 and kde_grid >= 2");
  if (data.synthetic) {
    SyntheticModel model(data.model, data.dim);
    if (data.n_train < 1 || data.n_val < 0 || data.n_test < 1) fail("bad synthetic sizes");
    if (!model.has_quantiles() && !eval.taus.empty()) fail("quantile levels given for a bivariate model");
  } else {
    if (data.csv_path.empty()) fail("csv source needs data.path");
    if (data.responses.empty()) fail("csv source needs data.responses");
  }
  train.validate();
  if (train.eval_every > 0 && !data.synthetic && data.fractions && (*data.fractions)[1] <= 0.0)
    fail("validation split is empty but eval_every > 0");
}

ExperimentConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  std::istringstream is(ini_text);
  pt::ini_parser::read_ini(is, tree);
  ExperimentConfig cfg;

  const std::string source = tree.get<std::string>("data.source", "synthetic");
  if (source != "synthetic" && source != "csv")
    throw std::invalid_argument("config: data.source must be synthetic or csv");
  cfg.data.synthetic = source == "synthetic";
  cfg.data.model = parse_model_id(tree.get<std::string>("data.model", "M1"));
  cfg.data.dim = tree.get<Index>("data.dim", cfg.data.dim);
  cfg.data.n_train = tree.get<Index>("data.train", cfg.data.n_train);
  cfg.data.n_val = tree.get<Index>("data.val", cfg.data.n_val);
  cfg.data.n_test = tree.get<Index>("data.test", cfg.data.n_test);
  cfg.data.csv_path = tree.get<std::string>("data.path", "");
  cfg.data.responses = split_trim(tree.get<std::string>("data.responses", ""), ',');
  if (cfg.data.responses.size() == 1 && cfg.data.responses[0].empty()) cfg.data.responses.clear();
  cfg.data.drop = split_trim(tree.get<std::string>("data.drop", ""), ',');
  if (cfg.data.drop.size() == 1 && cfg.data.drop[0].empty()) cfg.data.drop.clear();
  if (tree.get_optional<double>("data.train_frac")) {
    cfg.data.fractions = std::array<double, 3>{tree.get<double>("data.train_frac"),
                                               tree.get<double>("data.val_frac", 0.0),
                                               tree.get<double>("data.test_frac", 0.0)};
  }
  cfg.data.standardize = parse_bool(tree.get<std::string>("data.standardize", "true"));

  cfg.methods.clear();
  for (const auto& name : split_trim(tree.get<std::string>("methods.list", "NLS,cWGAN,WGR"), ','))
    cfg.methods.push_back(parse_method(name));
  cfg.traverse_lambda = parse_bool(tree.get<std::string>("methods.traverse", "false"));

  WgrConfig& t = cfg.train;
  t.lambda_l = tree.get<double>("methods.lambda_l", t.lambda_l);
  t.lambda_w = tree.get<double>("methods.lambda_w", 1.0 - t.lambda_l);
  t.noise_dim = tree.get<Index>("train.noise_dim", t.noise_dim);
  t.J = tree.get<Index>("train.J", t.J);
  t.batch_size = tree.get<Index>("train.batch", t.batch_size);
  t.iterations = tree.get<Index>("train.iterations", t.iterations);
  t.critic_steps = tree.get<Index>("train.critic_steps", t.critic_steps);
  t.gp_lambda = tree.get<double>("train.gp_lambda", t.gp_lambda);
  const std::string lip = tree.get<std::string>("train.lipschitz", "gradient_penalty");
  if (lip == "gradient_penalty")
    t.lipschitz = LipschitzMode::GradientPenalty;
  else if (lip == "clipping")
    t.lipschitz = LipschitzMode::Clipping;
  else
    throw std::invalid_argument("config: train.lipschitz must be gradient_penalty or clipping");
  t.clip = tree.get<double>("train.clip", t.clip);
  t.rmsprop.learning_rate = tree.get<double>("train.lr", t.rmsprop.learning_rate);
  t.rmsprop.decay = tree.get<double>("train.decay", t.rmsprop.decay);
  t.rmsprop.epsilon = tree.get<double>("train.epsilon", t.rmsprop.epsilon);
  if (auto s = tree.get_optional<std::string>("train.generator_hidden"))
    t.generator_hidden = parse_list<Index>(*s);
  if (auto s = tree.get_optional<std::string>("train.critic_hidden"))
    t.critic_hidden = parse_list<Index>(*s);
  t.activation_slope = tree.get<double>("train.slope", t.activation_slope);
  t.eval_every = tree.get<Index>("train.eval_every", t.eval_every);
  t.eval_K = tree.get<Index>("train.eval_K", t.eval_K);

  cfg.eval.K = tree.get<Index>("eval.K", cfg.eval.K);
  if (auto s = tree.get_optional<std::string>("eval.taus")) cfg.eval.taus = parse_list<double>(*s);
  cfg.eval.level = tree.get<double>("eval.level", cfg.eval.level);
  cfg.kde_samples = tree.get<Index>("eval.kde_samples", cfg.kde_samples);
  cfg.kde_grid = tree.get<Index>("eval.kde_grid", cfg.kde_grid);

  cfg.replications = tree.get<Index>("run.replications", cfg.replications);
  cfg.seed = tree.get<std::uint64_t>("run.seed", cfg.seed);
  cfg.threads = tree.get<int>("run.threads", cfg.threads);
  cfg.out_dir = tree.get<std::string>("run.out", cfg.out_dir.string());

  if (cfg.data.synthetic && !SyntheticModel(cfg.data.model, cfg.data.dim).has_quantiles() &&
      !tree.get_optional<std::string>("eval.taus"))
    cfg.eval.taus.clear();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string dump_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  const auto& d = cfg.data;
  const auto& t = cfg.train;
  os << "[data]\nsource = " << (d.synthetic ? "synthetic" : "csv") << '\n';
  if (d.synthetic) {
    os << "model = " << to_string(d.model) << "\ndim = " << d.dim << "\ntrain = " << d.n_train
       << "\nval = " << d.n_val << "\ntest = " << d.n_test << '\n';
  } else {
    os << "path = " << d.csv_path.string() << "\nresponses = " << join(d.responses)
       << "\ndrop = " << join(d.drop) << '\n';
    if (d.fractions)
      os << "train_frac = " << format_double((*d.fractions)[0])
         << "\nval_frac = " << format_double((*d.fractions)[1])
         << "\ntest_frac = " << format_double((*d.fractions)[2]) << '\n';
    else
      os << "train = " << d.n_train << "\nval = " << d.n_val << "\ntest = " << d.n_test << '\n';
    os << "standardize = " << (d.standardize ? "true" : "false") << '\n';
  }
  std::vector<std::string> names;
  for (Method m : cfg.methods) names.push_back(to_string(m));
  os << "\n[methods]\nlist = " << join(names) << "\ntraverse = " << (cfg.traverse_lambda ? "true" : "false")
     << "\nlambda_l = " << format_double(t.lambda_l) << "\nlambda_w = " << format_double(t.lambda_w)
     << '\n';
  os << "\n[train]\nnoise_dim = " << t.noise_dim << "\nJ = " << t.J << "\nbatch = " << t.batch_size
     << "\niterations = " << t.iterations << "\ncritic_steps = " << t.critic_steps
     << "\ngp_lambda = " << format_double(t.gp_lambda) << "\nlipschitz = "
     << (t.lipschitz == LipschitzMode::GradientPenalty ? "gradient_penalty" : "clipping")
     << "\nclip = " << format_double(t.clip) << "\nlr = " << format_double(t.rmsprop.learning_rate)
     << "\ndecay = " << format_double(t.rmsprop.decay)
     << "\nepsilon = " << format_double(t.rmsprop.epsilon)
     << "\ngenerator_hidden = " << join(t.generator_hidden)
     << "\ncritic_hidden = " << join(t.critic_hidden) << "\nslope = " << format_double(t.activation_slope)
     << "\neval_every = " << t.eval_every << "\neval_K = " << t.eval_K << '\n';
  os << "\n[eval]\nK = " << cfg.eval.K << "\ntaus = " << join_doubles(cfg.eval.taus)
     << "\nlevel = " << format_double(cfg.eval.level) << "\nkde_samples = " << cfg.kde_samples
     << "\nkde_grid = " << cfg.kde_grid << '\n';
  os << "\n[run]\nreplications = " << cfg.replications << "\nseed = " << cfg.seed
     << "\nthreads = " << cfg.threads << "\nout = " << cfg.out_dir.string() << '\n';
  return os.str();
}

Splits prepare_data(const ExperimentConfig& cfg, Index rep) {
  const std::uint64_t seed = rep_seed(cfg, rep);
  const auto& d = cfg.data;
  if (d.synthetic) {
    const SyntheticModel model(d.model, d.dim);
    Splits s;
    s.train = sample(model, d.n_train, derive_seed(seed, kTrainData));
    s.val = d.n_val > 0 ? sample(model, d.n_val, derive_seed(seed, kValData))
                        : make_dataset(Matrix(0, model.covariate_dim()), Matrix(0, model.response_dim()));
    s.test = sample(model, d.n_test, derive_seed(seed, kTestData));
    return s;
  }
  const Dataset all = read_csv(d.csv_path, d.responses, d.drop);
  SplitSpec spec;
  if (d.fractions)
    spec.fractions = *d.fractions;
  else
    spec.counts = std::array<Index, 3>{d.n_train, d.n_val, d.n_test};
  spec.seed = derive_seed(seed, kSplit);
  auto [train_set, val_set, test_set] = split(all, spec);
  if (!d.standardize) return Splits{std::move(train_set), std::move(val_set), std::move(test_set)};
  const Standardization st = fit_standardization(train_set);
  return Splits{apply_standardization(train_set, st), apply_standardization(val_set, st),
                apply_standardization(test_set, st)};
}

WgrConfig method_config(const ExperimentConfig& cfg, Method m, Index rep) {
  WgrConfig w = cfg.train;
  w.seed = derive_seed(rep_seed(cfg, rep), kTraining);
  if (m == Method::NLS) {
    w.lambda_l = 1.0;
    w.lambda_w = 0.0;
  } else if (m == Method::cWGAN) {
    w.lambda_l = 0.0;
    w.lambda_w = 1.0;
  }
  return w;
}

std::string format_mean_se(double mean, double se) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f(%.2f)", mean, se);
  return buf;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  write_file_atomic(cfg.out_dir / "effective_config.ini", dump_config(cfg));

  const auto R = static_cast<std::size_t>(cfg.replications);
  std::vector<std::vector<MethodRun>> per_rep(R);
  std::mutex log_mutex;

  auto run_rep = [&](std::size_t r) {
    const auto rep = static_cast<Index>(r);
    Splits data;
    try {
      data = prepare_data(cfg, rep);
    } catch (const std::exception& e) {
      for (Method m : cfg.methods) per_rep[r].push_back(MethodRun{m, rep, std::nullopt, e.what()});
      return;
    }
    for (Method m : cfg.methods) {
      per_rep[r].push_back(run_method(cfg, m, rep, data));
      std::lock_guard lock(log_mutex);
      const auto& last = per_rep[r].back();
      std::cerr << "[rep " << rep << "] " << to_string(m) << ": "
                << (last.report ? "L2=" + format_double(last.report->l2) : "FAILED: " + last.error)
                << '\n';
    }
  };

  if (cfg.threads <= 1 || R == 1) {
    for (std::size_t r = 0; r < R; ++r) run_rep(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), R);
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < R; r = next++) run_rep(r);
      });
    for (auto& th : pool) th.join();
  }

  RunResult result;
  for (auto& runs : per_rep)
    for (auto& run : runs) result.runs.push_back(std::move(run));

  std::ostringstream summary, failures;
  summary << "method,metric,mean,se,formatted,replications_ok,replications\n";
  failures << "method,replication,error\n";
  bool any_failure = false;
  for (Method m : cfg.methods) {
    std::vector<const EvalReport*> ok;
    for (const auto& run : result.runs) {
      if (run.method != m) continue;
      if (run.report) {
        ok.push_back(&*run.report);
      } else {
        any_failure = true;
        std::string err = run.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        failures << to_string(m) << ',' << run.rep << ',' << err << '\n';
      }
    }
    if (ok.empty()) {
      result.exit_code = 1;
      summary << to_string(m) << ",ALL_FAILED,,,,0," << cfg.replications << '\n';
      continue;
    }
    for (const auto& [metric, first] : ok.front()->metrics()) {
      std::vector<double> vals;
      for (const EvalReport* rep : ok)
        for (const auto& [name, v] : rep->metrics())
          if (name == metric) vals.push_back(v);
      const auto n = static_cast<double>(vals.size());
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= n;
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      const double se = vals.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
      SummaryRow row{to_string(m), metric, mean, se, static_cast<Index>(vals.size())};
      summary << row.method << ',' << row.metric << ',' << format_double(mean) << ','
              << format_double(se) << ',' << format_mean_se(mean, se) << ',' << row.n_ok << ','
              << cfg.replications << '\n';
      result.summary.push_back(std::move(row));
    }
  }
  write_file_atomic(cfg.out_dir / "summary.csv", summary.str());
  if (any_failure) write_file_atomic(cfg.out_dir / "failures.csv", failures.str());
  return result;
}

int run_sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<Index>& values) {
  if (values.empty()) throw std::invalid_argument("sweep: no axis values");
  for (Index v : values)
    if (v < 1) throw std::invalid_argument("sweep: axis values must be positive, got " + std::to_string(v));
  const std::string axis_name = axis == SweepAxis::NoiseDim ? "m" : "J";
  std::ostringstream merged;
  merged << axis_name << ",method,metric,mean,se,formatted\n";
  int exit_code = 0;
  for (Index v : values) {
    ExperimentConfig sub = cfg;
    if (axis == SweepAxis::NoiseDim)
      sub.train.noise_dim = v;
    else
      sub.train.J = v;
    sub.out_dir = cfg.out_dir / (axis_name + "_" + std::to_string(v));
    const RunResult r = run_experiment(sub);
    exit_code = std::max(exit_code, r.exit_code);
    for (const auto& row : r.summary)
      merged << v << ',' << row.method << ',' << row.metric << ',' << format_double(row.mean) << ','
             << format_double(row.se) << ',' << format_mean_se(row.mean, row.se) << '\n';
  }
  write_file_atomic(cfg.out_dir / "sweep_summary.csv", merged.str());
  return exit_code;
}

EvalReport eval_checkpoint(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint) {
  const TrainedGenerator gen = load_generator(checkpoint);
  const Splits data = prepare_data(cfg, 0);
  EvalOptions eval = cfg.eval;
  eval.seed = derive_seed(rep_seed(cfg, 0), kEvaluation);
  return evaluate(gen, data.test, synthetic_model(cfg), eval, checkpoint.stem().string());
}

void export_data(const ExperimentConfig& cfg) {
  const Splits data = prepare_data(cfg, 0);
  write_csv(cfg.out_dir / "train.csv", data.train);
  write_csv(cfg.out_dir / "val.csv", data.val);
  write_csv(cfg.out_dir / "test.csv", data.test);
  if (!cfg.data.synthetic) {
    SplitSpec spec;
    if (cfg.data.fractions)
      spec.fractions = *cfg.data.fractions;
    else
      spec.counts = std::array<Index, 3>{cfg.data.n_train, cfg.data.n_val, cfg.data.n_test};
    spec.seed = derive_seed(rep_seed(cfg, 0), kSplit);
    const Dataset all = read_csv(cfg.data.csv_path, cfg.data.responses, cfg.data.drop);
    write_split_manifest(cfg.out_dir / "split_manifest.txt", make_split(all.size(), spec));
  }
}

}  // namespace wgr
