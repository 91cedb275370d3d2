#include "qsurf/samples.hpp"

#include "qsurf/error.hpp"
#include "qsurf/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace qsurf {

Dataset::Dataset(RowMatrix points, std::string label, std::string source)
  : points_(std::move(points))
  , label_(std::move(label))
  , source_(std::move(source))
{
  if (points_.rows() < 1)
    throw DomainError("dataset must contain at least one point");
  if (points_.cols() < 1)
    throw DimensionError("dataset points must have at least one coordinate");
  if (!points_.allFinite())
    throw DomainError("dataset contains non-finite values");
}

DataFormat
data_format_from_string(std::string_view name)
{
  if (name == "csv")
    return DataFormat::csv;
  if (name == "jsonl")
    return DataFormat::jsonl;
  throw ConfigurationError("unknown data format '" + std::string(name) + "'");
}

DataFormat
data_format_for_path(const std::filesystem::path& path)
{
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson")
    return DataFormat::jsonl;
  return DataFormat::csv;
}

namespace {

std::string_view
trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view>
split_lines(std::string_view text)
{
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

bool
parse_real(std::string_view field, double& out)
{
  field = trim(field);
  if (!field.empty() && field.front() == '+')
    field.remove_prefix(1);
  if (field.empty())
    return false;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void
fail_at(std::size_t line, const std::string& what)
{
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

Dataset
finish(std::vector<double>&& values,
       std::size_t rows,
       std::size_t dims,
       std::string label,
       std::string source)
{
  if (rows == 0)
    throw ParseError("no data rows");
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dims));
  std::copy(values.begin(), values.end(), m.data());
  return Dataset(std::move(m), std::move(label), std::move(source));
}

Dataset
parse_csv(std::string_view text, std::string label, std::string source)
{
  std::vector<double> values;
  std::size_t dims = 0, rows = 0;
  bool first_content = true;
  const auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto line = trim(lines[li]);
    if (line.empty())
      continue;
    std::vector<double> row;
    bool numeric = true;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      const auto field = line.substr(
        start, comma == std::string_view::npos ? line.size() - start : comma - start);
      double v;
      if (parse_real(field, v))
        row.push_back(v);
      else
        numeric = false;
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    if (first_content) {
      first_content = false;
      if (!numeric)
        continue; // header row
    }
    if (!numeric)
      fail_at(li + 1, "non-numeric field");
    for (double v : row)
      if (!std::isfinite(v))
        fail_at(li + 1, "non-finite value");
    if (dims == 0)
      dims = row.size();
    else if (row.size() != dims)
      fail_at(li + 1, "expected " + std::to_string(dims) + " fields, found " +
                        std::to_string(row.size()));
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  return finish(std::move(values), rows, dims, std::move(label), std::move(source));
}

Dataset
parse_jsonl(std::string_view text, std::string label, std::string source)
{
  std::vector<double> values;
  std::size_t dims = 0, rows = 0;
  const auto lines = split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto line = trim(lines[li]);
    if (line.empty())
      continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_at(li + 1, e.what());
    }
    if (!j.is_array())
      fail_at(li + 1, "expected an array of numbers");
    if (dims == 0)
      dims = j.size();
    else if (j.size() != dims)
      fail_at(li + 1, "expected " + std::to_string(dims) + " values, found " +
                        std::to_string(j.size()));
    for (const auto& v : j) {
      if (!v.is_number())
        fail_at(li + 1, "non-numeric value");
      const double x = v.get<double>();
      if (!std::isfinite(x))
        fail_at(li + 1, "non-finite value");
      values.push_back(x);
    }
    ++rows;
  }
  if (dims == 0 && rows > 0)
    throw ParseError("rows have no coordinates");
  return finish(std::move(values), rows, dims, std::move(label), std::move(source));
}

} // namespace

Dataset
parse_dataset(std::string_view text, DataFormat format, std::string label)
{
  if (format == DataFormat::csv)
    return parse_csv(text, std::move(label), "csv text");
  return parse_jsonl(text, std::move(label), "jsonl text");
}

Dataset
load_dataset(const std::filesystem::path& path, DataFormat format)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::string label = path.stem().string();
  if (format == DataFormat::csv)
    return parse_csv(text, label, path.string());
  return parse_jsonl(text, label, path.string());
}

Dataset
load_dataset(const std::filesystem::path& path)
{
  return load_dataset(path, data_format_for_path(path));
}

void
write_csv(const Dataset& data, std::ostream& out)
{
  char buf[32];
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

ProjectionCache::ProjectionCache(std::shared_ptr<const Dataset> data,
                                 DirectionGrid grid,
                                 const CacheOptions& options)
  : data_(std::move(data))
  , grid_(std::move(grid))
  , n_(data_ ? data_->n() : 0)
{
  if (!data_)
    throw ConfigurationError("projection cache needs a dataset");
  if (data_->dims() != grid_.dims())
    throw DimensionError("grid has d=" + std::to_string(grid_.dims()) +
                         " but data has d=" + std::to_string(data_->dims()));
  const std::size_t k = grid_.size();
  const double bytes = static_cast<double>(k) * static_cast<double>(n_) * sizeof(double);
  if (bytes > static_cast<double>(options.max_bytes))
    throw ConfigurationError("projection cache needs " +
                             std::to_string(static_cast<std::size_t>(bytes)) +
                             " bytes, above the configured cap of " +
                             std::to_string(options.max_bytes));
  proj_.resize(k * n_);

  // With exact antipodes the projections on -u are the reversed negations of
  // those on u, so only one direction of each pair is sorted.
  std::vector<std::size_t> primary;
  for (std::size_t j = 0; j < k; ++j)
    if (!grid_.exact_antipodes() || grid_.antipode(j) >= j)
      primary.push_back(j);

  parallel_for(
    primary.size(),
    [&](std::size_t p) {
      const std::size_t j = primary[p];
      const auto u = grid_[j].span();
      double* out = proj_.data() + j * n_;
      for (std::size_t i = 0; i < n_; ++i)
        out[i] = dot(data_->row(i), u);
      sort_values({ out, n_ });
      if (grid_.exact_antipodes()) {
        const std::size_t a = grid_.antipode(j);
        if (a != j) {
          double* mirror = proj_.data() + a * n_;
          for (std::size_t i = 0; i < n_; ++i)
            mirror[i] = -out[n_ - 1 - i];
        }
      }
    },
    options.threads);
}

std::span<const double>
ProjectionCache::projections(std::size_t u_index) const
{
  if (u_index >= grid_.size())
    throw DomainError("direction index " + std::to_string(u_index) +
                      " out of range");
  return { proj_.data() + u_index * n_, n_ };
}

ProjectionCache
build_projection_cache(std::shared_ptr<const Dataset> data,
                       const DirectionGrid& grid,
                       const CacheOptions& options)
{
  return ProjectionCache(std::move(data), grid, options);
}

ProjectionCache
build_projection_cache(const Dataset& data,
                       const DirectionGrid& grid,
                       const CacheOptions& options)
{
  return ProjectionCache(std::make_shared<const Dataset>(data), grid, options);
}

std::size_t
quantile_rank(std::size_t n, double alpha)
{
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw DomainError("alpha must lie in (0, 1]");
  if (n == 0)
    throw DomainError("empty sample");
  const double nd = static_cast<double>(n);
  auto r = static_cast<std::size_t>(std::ceil(nd * alpha));
  r = std::clamp<std::size_t>(r, 1, n);
  while (r > 1 && static_cast<double>(r - 1) / nd >= alpha)
    --r;
  while (r < n && static_cast<double>(r) / nd < alpha)
    ++r;
  return r;
}

double
empirical_cdf(std::span<const double> sorted, double c)
{
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), c);
  return static_cast<double>(it - sorted.begin()) /
         static_cast<double>(sorted.size());
}

double
empirical_quantile(std::span<const double> sorted, double alpha)
{
  return sorted[quantile_rank(sorted.size(), alpha) - 1];
}

double
empirical_cdf(const ProjectionCache& cache, std::size_t u_index, double c)
{
  return empirical_cdf(cache.projections(u_index), c);
}

double
empirical_quantile(const ProjectionCache& cache, std::size_t u_index, double alpha)
{
  return empirical_quantile(cache.projections(u_index), alpha);
}

} // namespace qsurf
