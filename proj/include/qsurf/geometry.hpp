#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qsurf {

//! A location in R^d (data units). Observers are points too.
using Point = Eigen::VectorXd;

//! Inner product with a fixed left-to-right summation order.
inline double
dot(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

inline std::span<const double>
as_span(const Point& p)
{
  return { p.data(), static_cast<std::size_t>(p.size()) };
}

//! Throws DomainError unless every coordinate is finite.
void require_finite(const Point& p, std::string_view what);

//! A unit vector of S_{d-1}; the norm invariant is checked on construction.
class Direction
{
public:
  //! Accepts v only if | |v| - 1 | <= 1e-12.
  explicit Direction(Point v);

  //! Scales v to unit length; v must be non-zero.
  static Direction normalized(const Point& v);

  int dims() const { return static_cast<int>(u_.size()); }
  const Point& vector() const { return u_; }
  std::span<const double> span() const { return as_span(u_); }
  double operator[](int i) const { return u_[i]; }

  //! Exact antipode: every coordinate negated.
  Direction operator-() const;

  bool operator==(const Direction& other) const { return u_ == other.u_; }

private:
  Point u_;
};

enum class GridScheme
{
  uniform_angle_2d,
  fibonacci_sphere_3d,
  explicit_list
};

std::string_view to_string(GridScheme scheme);
GridScheme grid_scheme_from_string(std::string_view name);

//! Built-in scheme for a dimension: d=1 explicit {+1,-1}, d=2 uniform angle, d=3 Fibonacci.
GridScheme default_scheme(int dims);

/// A finite discretisation of the unit sphere with an antipode map.
///
/// For uniform-angle grids with even k the second half of the grid is built
/// as the exact negation of the first half, so antipode(i) = (i + k/2) mod k
/// and the stored vectors are bitwise negatives. Other grids map each
/// direction to the nearest neighbour of its negation.
class DirectionGrid
{
public:
  //! Throws ConfigurationError on unsupported (d, scheme) pairs or k < 2.
  static DirectionGrid make(int dims, std::size_t count, GridScheme scheme);

  //! Explicit list; must be non-empty, same dimension, pairwise distinct.
  static DirectionGrid from_list(std::vector<Direction> directions);

  int dims() const { return dims_; }
  std::size_t size() const { return directions_.size(); }
  GridScheme scheme() const { return scheme_; }
  const Direction& operator[](std::size_t i) const { return directions_[i]; }
  const std::vector<Direction>& directions() const { return directions_; }

  std::size_t antipode(std::size_t i) const { return antipode_[i]; }

  //! True when every antipode is the exact negation.
  bool exact_antipodes() const { return exact_antipodes_; }

private:
  DirectionGrid(int dims, GridScheme scheme, std::vector<Direction> directions);

  int dims_ = 0;
  GridScheme scheme_ = GridScheme::explicit_list;
  std::vector<Direction> directions_;
  std::vector<std::size_t> antipode_;
  bool exact_antipodes_ = false;
};

//! Closed half-space {x : <x,u> <= c} in observer-free form.
struct HalfSpace
{
  Direction u;
  double c;

  bool contains(std::span<const double> x) const { return dot(x, u.span()) <= c; }
  bool contains(const Point& x) const { return contains(as_span(x)); }
};

//! H(O,u,y) = {x : <x-O,u> <= y}, stored as c = <O,u> + y.
HalfSpace halfspace_at(const Point& observer, const Direction& u, double y);

//! Hyperband {x : lo < <x,u> <= hi}, the difference of two nested half-spaces.
class Band
{
public:
  Band(Direction u, double lo, double hi);

  const Direction& direction() const { return u_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const { return hi_ - lo_; }

  bool contains(std::span<const double> x) const
  {
    const double t = dot(x, u_.span());
    return lo_ < t && t <= hi_;
  }

private:
  Direction u_;
  double lo_;
  double hi_;
};

} // namespace qsurf
