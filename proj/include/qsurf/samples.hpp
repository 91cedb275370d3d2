#pragma once

#include "qsurf/geometry.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qsurf {

using RowMatrix =
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

//! n points in R^d, one per row. Validated on construction.
class Dataset
{
public:
  Dataset(RowMatrix points, std::string label = {}, std::string source = {});

  std::size_t n() const { return static_cast<std::size_t>(points_.rows()); }
  int dims() const { return static_cast<int>(points_.cols()); }
  const RowMatrix& points() const { return points_; }
  const std::string& label() const { return label_; }
  const std::string& source() const { return source_; }

  std::span<const double> row(std::size_t i) const
  {
    return { points_.row(static_cast<Eigen::Index>(i)).data(),
             static_cast<std::size_t>(points_.cols()) };
  }

private:
  RowMatrix points_;
  std::string label_;
  std::string source_;
};

enum class DataFormat
{
  csv,
  jsonl
};

DataFormat data_format_from_string(std::string_view name);
//! ".jsonl"/".ndjson" map to jsonl, everything else to csv.
DataFormat data_format_for_path(const std::filesystem::path& path);

/// CSV: comma-separated reals, one point per row, optional header row
/// (detected when the first row is not fully numeric). JSONL: one array of d
/// numbers per line. Ragged rows raise ParseError naming the line; non-finite
/// values are rejected.
Dataset parse_dataset(std::string_view text, DataFormat format, std::string label = {});
Dataset load_dataset(const std::filesystem::path& path, DataFormat format);
Dataset load_dataset(const std::filesystem::path& path);

//! Writes one point per row with round-trip precision.
void write_csv(const Dataset& data, std::ostream& out);

//! Sorts ascending in place (LSD radix on order-preserving keys for large inputs).
void sort_values(std::span<double> values);

struct CacheOptions
{
  //! Upper bound on projection storage; exceeding it is a ConfigurationError.
  std::size_t max_bytes = std::size_t{ 4 } << 30;
  unsigned threads = 0;
};

/// Per-direction ascending projections <X_i, u> of a dataset.
///
/// The cache is observer-free: every directional quantile, half-space mass
/// and band count seen from any observer is answered from these arrays.
/// Immutable after construction.
class ProjectionCache
{
public:
  ProjectionCache(std::shared_ptr<const Dataset> data,
                  DirectionGrid grid,
                  const CacheOptions& options = {});

  const DirectionGrid& grid() const { return grid_; }
  std::size_t n() const { return n_; }
  int dims() const { return grid_.dims(); }
  const Dataset& dataset() const { return *data_; }
  const std::shared_ptr<const Dataset>& dataset_ptr() const { return data_; }

  std::span<const double> projections(std::size_t u_index) const;

private:
  std::shared_ptr<const Dataset> data_;
  DirectionGrid grid_;
  std::size_t n_;
  std::vector<double> proj_;
};

ProjectionCache build_projection_cache(std::shared_ptr<const Dataset> data,
                                       const DirectionGrid& grid,
                                       const CacheOptions& options = {});
ProjectionCache build_projection_cache(const Dataset& data,
                                       const DirectionGrid& grid,
                                       const CacheOptions& options = {});

/// 1-based rank of the alpha-th order statistic under the inf definition:
/// the smallest i with i/n >= alpha (evaluated in floating point exactly as
/// empirical_cdf evaluates counts). Requires 0 < alpha <= 1.
std::size_t quantile_rank(std::size_t n, double alpha);

//! #{v <= c} / n on an ascending array.
double empirical_cdf(std::span<const double> sorted, double c);
//! The quantile_rank-th order statistic of an ascending array.
double empirical_quantile(std::span<const double> sorted, double alpha);

double empirical_cdf(const ProjectionCache& cache, std::size_t u_index, double c);
double empirical_quantile(const ProjectionCache& cache, std::size_t u_index, double alpha);

} // namespace qsurf
