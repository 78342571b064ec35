#include "wgr/dataio.hpp"

#include "wgr/io_util.hpp"
#include "wgr/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace wgr {

void Dataset::validate() const {
  if (X.rows() != Y.rows())
    throw std::invalid_argument("dataset: X has " + std::to_string(X.rows()) + " rows, Y has " +
                                std::to_string(Y.rows()));
  if (static_cast<Index>(x_names.size()) != X.cols() ||
      static_cast<Index>(y_names.size()) != Y.cols())
    throw std::invalid_argument("dataset: column names do not match matrix widths");
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.Y.resize(static_cast<Index>(rows.size()), Y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Index>(i)) = X.row(rows[i]);
    out.Y.row(static_cast<Index>(i)) = Y.row(rows[i]);
  }
  out.x_names = x_names;
  out.y_names = y_names;
  out.standardization = standardization;
  return out;
}

Dataset make_dataset(Matrix X, Matrix Y) {
  Dataset ds;
  ds.X = std::move(X);
  ds.Y = std::move(Y);
  for (Index j = 0; j < ds.X.cols(); ++j) ds.x_names.push_back("x" + std::to_string(j + 1));
  for (Index j = 0; j < ds.Y.cols(); ++j) ds.y_names.push_back("y" + std::to_string(j + 1));
  ds.validate();
  return ds;
}

Dataset read_csv(const std::filesystem::path& path,
                 const std::vector<std::string>& response_columns,
                 const std::vector<std::string>& drop_columns) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_csv: " + path.string() + " is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_trim(line, ',');

  auto find_col = [&](const std::string& name) -> Index {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error("read_csv: column '" + name + "' not found in " + path.string());
    return static_cast<Index>(it - header.begin());
  };

  std::vector<Index> y_cols;
  for (const auto& name : response_columns) y_cols.push_back(find_col(name));
  std::vector<char> skip(header.size(), 0);
  for (Index c : y_cols) skip[static_cast<std::size_t>(c)] = 1;
  for (const auto& name : drop_columns) skip[static_cast<std::size_t>(find_col(name))] = 1;
  std::vector<Index> x_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (!skip[c]) x_cols.push_back(static_cast<Index>(c));

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_trim(line, ',');
    if (fields.size() != header.size())
      throw std::runtime_error("read_csv: row " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(header.size()));
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto& f = fields[c];
      const char* begin = f.data();
      if (!f.empty() && f[0] == '+') ++begin;
      auto res = std::from_chars(begin, f.data() + f.size(), values[c]);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw std::runtime_error("read_csv: non-numeric cell '" + f + "' at row " +
                                 std::to_string(line_no) + ", column '" + header[c] + "'");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw std::runtime_error("read_csv: no data rows in " + path.string());

  Dataset ds;
  const auto n = static_cast<Index>(rows.size());
  ds.X.resize(n, static_cast<Index>(x_cols.size()));
  ds.Y.resize(n, static_cast<Index>(y_cols.size()));
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      ds.X(i, static_cast<Index>(j)) = r[static_cast<std::size_t>(x_cols[j])];
    for (std::size_t j = 0; j < y_cols.size(); ++j)
      ds.Y(i, static_cast<Index>(j)) = r[static_cast<std::size_t>(y_cols[j])];
  }
  for (Index c : x_cols) ds.x_names.push_back(header[static_cast<std::size_t>(c)]);
  for (Index c : y_cols) ds.y_names.push_back(header[static_cast<std::size_t>(c)]);
  return ds;
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  ds.validate();
  std::ostringstream os;
  bool first = true;
  for (const auto& n : ds.x_names) os << (first ? "" : ",") << n, first = false;
  for (const auto& n : ds.y_names) os << (first ? "" : ",") << n, first = false;
  os << '\n';
  for (Index i = 0; i < ds.size(); ++i) {
    first = true;
    for (Index j = 0; j < ds.x_dim(); ++j) os << (first ? "" : ",") << format_double(ds.X(i, j)), first = false;
    for (Index j = 0; j < ds.y_dim(); ++j) os << (first ? "" : ",") << format_double(ds.Y(i, j)), first = false;
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

namespace {

void column_stats(const Matrix& m, RowVector& mean, RowVector& scale) {
  const auto n = static_cast<double>(m.rows());
  mean = m.colwise().sum() / n;
  scale.resize(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double var = (m.col(j).array() - mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    scale(j) = sd > 0.0 ? sd : 1.0;
  }
}

}  // namespace

Standardization fit_standardization(const Dataset& train) {
  if (train.size() == 0) throw std::invalid_argument("fit_standardization: empty dataset");
  Standardization st;
  column_stats(train.X, st.x_mean, st.x_scale);
  column_stats(train.Y, st.y_mean, st.y_scale);
  return st;
}

Dataset apply_standardization(const Dataset& ds, const Standardization& st) {
  if (ds.standardization) throw std::invalid_argument("apply_standardization: already standardized");
  Dataset out = ds;
  out.X = ((ds.X.rowwise() - st.x_mean).array().rowwise() / st.x_scale.array()).matrix();
  out.Y = ((ds.Y.rowwise() - st.y_mean).array().rowwise() / st.y_scale.array()).matrix();
  out.standardization = st;
  return out;
}

Dataset standardize(const Dataset& ds) { return apply_standardization(ds, fit_standardization(ds)); }

Dataset destandardize(const Dataset& ds) {
  if (!ds.standardization) return ds;
  const auto& st = *ds.standardization;
  Dataset out = ds;
  out.X = (ds.X.array().rowwise() * st.x_scale.array()).matrix().rowwise() + st.x_mean;
  out.Y = (ds.Y.array().rowwise() * st.y_scale.array()).matrix().rowwise() + st.y_mean;
  out.standardization.reset();
  return out;
}

SplitIndices make_split(Index n, const SplitSpec& spec) {
  std::array<Index, 3> counts{};
  if (spec.counts) {
    counts = *spec.counts;
  } else if (spec.fractions) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double f = (*spec.fractions)[k];
      if (f < 0.0 || f > 1.0) throw std::invalid_argument("split: fraction outside [0, 1]");
      counts[k] = static_cast<Index>(std::llround(f * static_cast<double>(n)));
    }
  } else {
    throw std::invalid_argument("split: neither counts nor fractions given");
  }
  for (Index c : counts)
    if (c < 0) throw std::invalid_argument("split: negative count");
  if (counts[0] + counts[1] + counts[2] > n)
    throw std::invalid_argument("split: requested " + std::to_string(counts[0]) + "+" +
                                std::to_string(counts[1]) + "+" + std::to_string(counts[2]) +
                                " rows but dataset has " + std::to_string(n));

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(spec.seed);
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
  }
  SplitIndices out;
  auto it = perm.begin();
  out.train.assign(it, it + counts[0]);
  it += counts[0];
  out.val.assign(it, it + counts[1]);
  it += counts[1];
  out.test.assign(it, it + counts[2]);
  return out;
}

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  const auto s = make_split(ds.size(), spec);
  return {ds.subset(s.train), ds.subset(s.val), ds.subset(s.test)};
}

void write_split_manifest(const std::filesystem::path& path, const SplitIndices& s) {
  std::ostringstream os;
  auto emit = [&](const char* name, const std::vector<Index>& idx) {
    os << name;
    for (Index i : idx) os << ' ' << i;
    os << '\n';
  };
  emit("train", s.train);
  emit("val", s.val);
  emit("test", s.test);
  write_file_atomic(path, os.str());
}

SplitIndices read_split_manifest(const std::filesystem::path& path) {
  std::istringstream is(read_file(path));
  SplitIndices s;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    std::vector<Index>* target = name == "train" ? &s.train
                                 : name == "val" ? &s.val
                                 : name == "test" ? &s.test
                                                  : nullptr;
    if (!target) throw std::runtime_error("split manifest: unknown section '" + name + "'");
    Index i;
    while (ls >> i) target->push_back(i);
  }
  return s;
}

}  // namespace wgr
