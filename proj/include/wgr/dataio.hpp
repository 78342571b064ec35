#pragma once

// Tabular datasets: CSV ingestion, standardization, splitting.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace wgr {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Per-column affine map value -> (value - mean) / scale.
struct Standardization {
  RowVector x_mean, x_scale;
  RowVector y_mean, y_scale;
};

struct Dataset {
  Matrix X;  // n x d
  Matrix Y;  // n x q
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;
  std::optional<Standardization> standardization;

  Index size() const { return X.rows(); }
  Index x_dim() const { return X.cols(); }
  Index y_dim() const { return Y.cols(); }

  /// Rows in the given order; carries names and standardization state.
  Dataset subset(std::span<const Index> rows) const;
  /// Throws if X/Y row counts or name counts disagree.
  void validate() const;
};

/// Names x1..xd, y1..yq.
Dataset make_dataset(Matrix X, Matrix Y);

/// Header row required. `response_columns` become Y (in the given order),
/// `drop_columns` are ignored, every other column becomes X in file order.
Dataset read_csv(const std::filesystem::path& path,
                 const std::vector<std::string>& response_columns,
                 const std::vector<std::string>& drop_columns = {});
/// Writes X columns then Y columns with full round-trip precision.
void write_csv(const std::filesystem::path& path, const Dataset& ds);

/// Population mean and SD of every column; a constant column gets scale 1.
Standardization fit_standardization(const Dataset& train);
/// Maps values with the given statistics; never refits.
Dataset apply_standardization(const Dataset& ds, const Standardization& st);
/// Fits on `ds` itself and applies.
Dataset standardize(const Dataset& ds);
/// Exact inverse of apply_standardization using the stored state.
Dataset destandardize(const Dataset& ds);

struct SplitSpec {
  /// Either explicit counts or fractions of n (rounded to nearest).
  std::optional<std::array<Index, 3>> counts;
  std::optional<std::array<double, 3>> fractions;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<Index> train, val, test;
};

/// Seed-deterministic disjoint partition of 0..n-1.
SplitIndices make_split(Index n, const SplitSpec& spec);
std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

void write_split_manifest(const std::filesystem::path& path, const SplitIndices& s);
SplitIndices read_split_manifest(const std::filesystem::path& path);

}  // namespace wgr
