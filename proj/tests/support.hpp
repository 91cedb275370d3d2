#pragma once

#include "qsurf/rng.hpp"
#include "qsurf/samples.hpp"

#include <algorithm>
#include <memory>
#include <vector>

namespace qsurf::test {

//! n points with coordinates uniform on [-scale, scale].
inline Dataset
uniform_cloud(std::size_t n, int d, std::uint64_t seed, double scale = 1.0)
{
  Rng rng(seed, 77);
  RowMatrix m(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (int j = 0; j < d; ++j)
      m(i, j) = rng.uniform(-scale, scale);
  return Dataset(std::move(m));
}

inline Dataset
from_rows(std::vector<std::vector<double>> rows)
{
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return Dataset(std::move(m));
}

//! Linear scan for the smallest i with i/n >= alpha.
inline std::size_t
naive_rank(std::size_t n, double alpha)
{
  for (std::size_t i = 1; i <= n; ++i)
    if (static_cast<double>(i) / static_cast<double>(n) >= alpha)
      return i;
  return n;
}

//! Projects, sorts, indexes. Shares no code with the cache.
inline double
naive_quantile(const Dataset& data, const Point& u, double alpha)
{
  std::vector<double> v;
  for (std::size_t i = 0; i < data.n(); ++i) {
    double s = 0.0;
    for (int j = 0; j < data.dims(); ++j)
      s += data.points()(static_cast<Eigen::Index>(i), j) * u[j];
    v.push_back(s);
  }
  std::sort(v.begin(), v.end());
  return v[naive_rank(v.size(), alpha) - 1];
}

inline Point
pt(std::initializer_list<double> xs)
{
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs)
    p[i++] = x;
  return p;
}

} // namespace qsurf::test
