#include "qsurf/geometry.hpp"

#include "qsurf/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace qsurf {

void
require_finite(const Point& p, std::string_view what)
{
  if (p.size() < 1)
    throw DimensionError(std::string(what) + " must have at least one coordinate");
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (!std::isfinite(p[i]))
      throw DomainError(std::string(what) + " has a non-finite coordinate");
}

Direction::Direction(Point v)
  : u_(std::move(v))
{
  require_finite(u_, "direction");
  if (std::abs(u_.norm() - 1.0) > 1e-12)
    throw DomainError("direction is not a unit vector");
}

Direction
Direction::normalized(const Point& v)
{
  require_finite(v, "direction");
  const double norm = v.norm();
  if (norm == 0.0)
    throw DomainError("cannot normalise the zero vector");
  return Direction(v / norm);
}

Direction
Direction::operator-() const
{
  Direction out = *this;
  out.u_ = -u_;
  return out;
}

std::string_view
to_string(GridScheme scheme)
{
  switch (scheme) {
    case GridScheme::uniform_angle_2d:
      return "uniform-angle-2d";
    case GridScheme::fibonacci_sphere_3d:
      return "fibonacci-sphere-3d";
    case GridScheme::explicit_list:
      return "explicit";
  }
  return "explicit";
}

GridScheme
grid_scheme_from_string(std::string_view name)
{
  if (name == "uniform-angle-2d")
    return GridScheme::uniform_angle_2d;
  if (name == "fibonacci-sphere-3d")
    return GridScheme::fibonacci_sphere_3d;
  if (name == "explicit")
    return GridScheme::explicit_list;
  throw ConfigurationError("unknown grid scheme '" + std::string(name) + "'");
}

GridScheme
default_scheme(int dims)
{
  switch (dims) {
    case 1:
      return GridScheme::explicit_list;
    case 2:
      return GridScheme::uniform_angle_2d;
    case 3:
      return GridScheme::fibonacci_sphere_3d;
    default:
      throw ConfigurationError("no built-in direction grid for d=" +
                               std::to_string(dims));
  }
}

namespace {

std::vector<Direction>
uniform_angle(std::size_t k)
{
  std::vector<Direction> out;
  out.reserve(k);
  const bool even = k % 2 == 0;
  const std::size_t first = even ? k / 2 : k;
  for (std::size_t j = 0; j < first; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) /
                         static_cast<double>(k);
    Point v(2);
    v << std::cos(theta), std::sin(theta);
    out.push_back(Direction::normalized(v));
  }
  if (even)
    for (std::size_t j = 0; j < first; ++j)
      out.push_back(-out[j]);
  return out;
}

std::vector<Direction>
fibonacci_sphere(std::size_t k)
{
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Direction> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double z =
      1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(k);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    Point v(3);
    v << r * std::cos(phi), r * std::sin(phi), z;
    out.push_back(Direction::normalized(v));
  }
  return out;
}

} // namespace

DirectionGrid
DirectionGrid::make(int dims, std::size_t count, GridScheme scheme)
{
  if (count < 2)
    throw ConfigurationError("a direction grid needs at least 2 directions");
  if (dims == 1) {
    if (count != 2)
      throw ConfigurationError("the d=1 grid is exactly {+1, -1}");
    Point plus(1);
    plus << 1.0;
    Direction up(plus);
    return DirectionGrid(1, GridScheme::explicit_list, { up, -up });
  }
  if (dims == 2 && scheme == GridScheme::uniform_angle_2d)
    return DirectionGrid(2, scheme, uniform_angle(count));
  if (dims == 3 && scheme == GridScheme::fibonacci_sphere_3d)
    return DirectionGrid(3, scheme, fibonacci_sphere(count));
  throw ConfigurationError("unsupported grid: d=" + std::to_string(dims) +
                           " with scheme " + std::string(to_string(scheme)));
}

DirectionGrid
DirectionGrid::from_list(std::vector<Direction> directions)
{
  if (directions.empty())
    throw ConfigurationError("direction grid is empty");
  const int d = directions.front().dims();
  for (const auto& u : directions)
    if (u.dims() != d)
      throw DimensionError("direction grid mixes dimensions");
  for (std::size_t i = 0; i < directions.size(); ++i)
    for (std::size_t j = i + 1; j < directions.size(); ++j)
      if (directions[i] == directions[j])
        throw ConfigurationError("direction grid has repeated directions");
  return DirectionGrid(d, GridScheme::explicit_list, std::move(directions));
}

DirectionGrid::DirectionGrid(int dims,
                             GridScheme scheme,
                             std::vector<Direction> directions)
  : dims_(dims)
  , scheme_(scheme)
  , directions_(std::move(directions))
{
  const std::size_t k = directions_.size();
  antipode_.resize(k);
  exact_antipodes_ = true;
  for (std::size_t i = 0; i < k; ++i) {
    const Point target = -directions_[i].vector();
    std::size_t best = i;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double dist = (directions_[j].vector() - target).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    antipode_[i] = best;
    if (best_dist != 0.0)
      exact_antipodes_ = false;
  }
}

HalfSpace
halfspace_at(const Point& observer, const Direction& u, double y)
{
  return HalfSpace{ u, dot(as_span(observer), u.span()) + y };
}

Band::Band(Direction u, double lo, double hi)
  : u_(std::move(u))
  , lo_(lo)
  , hi_(hi)
{
  if (!(lo < hi))
    throw DomainError("band requires lo < hi");
}

} // namespace qsurf
