#pragma once

#include "qsurf/geometry.hpp"
#include "qsurf/samples.hpp"

#include <Eigen/Core>

#include <vector>

namespace qsurf {

//! Closed range of levels [alpha_minus, alpha_plus] inside [1/2, 1).
struct DeltaRange
{
  double alpha_minus = 0.6;
  double alpha_plus = 0.9;

  //! Validates 1/2 <= alpha_minus <= alpha_plus < 1.
  static DeltaRange make(double alpha_minus, double alpha_plus);

  //! `steps` evenly spaced levels from alpha_minus to alpha_plus (inclusive).
  std::vector<double> grid(int steps) const;
};

struct SurfaceEntry
{
  Direction u;
  double y; //!< signed distance from the observer along u
  Point q;  //!< observer + y * u
};

//! Discretised alpha-th quantile surface seen from an observer.
struct QuantileSurface
{
  Point observer;
  double alpha = 0.5;
  GridScheme scheme = GridScheme::explicit_list;
  std::vector<SurfaceEntry> entries;

  int dims() const { return static_cast<int>(observer.size()); }
};

//! Intersection of the empirical quantile half-planes; may be empty.
struct TukeyRegion2D
{
  double alpha = 0.5;
  std::vector<Eigen::Vector2d> vertices; //!< counter-clockwise

  bool empty() const { return vertices.empty(); }
};

//! Y_n(O,u,alpha): empirical alpha-quantile of <X,u> minus <O,u>.
double directional_quantile(const ProjectionCache& cache,
                            const Point& observer,
                            std::size_t u_index,
                            double alpha);

//! One entry per grid direction, in grid order. Requires alpha in [1/2, 1).
QuantileSurface quantile_surface(const ProjectionCache& cache,
                                 const Point& observer,
                                 double alpha);

/// Moves a surface to a new observer without touching the data:
/// y' = y - <O'-O,u>, q' = q + (O'-O) - <O'-O,u> u.
QuantileSurface transfer_surface(const QuantileSurface& surface, const Point& new_observer);

/// P_n of the empirical quantile half-space H_n(u, alpha). For continuous
/// data with n > d this lies in [alpha, alpha + d/n].
double quantile_halfspace_mass(const ProjectionCache& cache,
                               const Point& observer,
                               std::size_t u_index,
                               double alpha);

/// Empirical band infimum: the smallest P_n mass of a band of width eps whose
/// edges both lie in the admissible range [Y_n(alpha-), Y_n(alpha+)] of some
/// grid direction. Throws NoAdmissibleBand when no direction has room.
double psi_hat(const ProjectionCache& cache,
               const Point& observer,
               double eps,
               const DeltaRange& delta);

//! Half-plane clipping of a bounding box by every {<x,u> <= c_u}. d = 2 only.
TukeyRegion2D tukey_region_2d(const ProjectionCache& cache, double alpha);

//! Hausdorff distance between the q point sets of two surfaces (brute force).
double hausdorff_distance(const QuantileSurface& a, const QuantileSurface& b);

//! max_u |Y_n(O,u,1/2) + Y_n(O,-u,1/2)|; needs a grid with exact antipodes.
double median_antipodal_gap(const ProjectionCache& cache, const Point& observer);

} // namespace qsurf
