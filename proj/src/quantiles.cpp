#include "qsurf/quantiles.hpp"

#include "qsurf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qsurf {

DeltaRange
DeltaRange::make(double alpha_minus, double alpha_plus)
{
  if (!(alpha_minus >= 0.5 && alpha_minus <= alpha_plus && alpha_plus < 1.0))
    throw DomainError("level range must satisfy 1/2 <= alpha- <= alpha+ < 1");
  return DeltaRange{ alpha_minus, alpha_plus };
}

std::vector<double>
DeltaRange::grid(int steps) const
{
  if (steps < 1)
    throw DomainError("alpha grid needs at least one step");
  std::vector<double> out(static_cast<std::size_t>(steps));
  if (steps == 1) {
    out[0] = alpha_minus;
    return out;
  }
  for (int i = 0; i < steps; ++i)
    out[static_cast<std::size_t>(i)] =
      alpha_minus + (alpha_plus - alpha_minus) * i / (steps - 1);
  out.back() = alpha_plus;
  return out;
}

namespace {

void
require_observer(const ProjectionCache& cache, const Point& observer)
{
  require_finite(observer, "observer");
  if (observer.size() != cache.dims())
    throw DimensionError("observer has d=" + std::to_string(observer.size()) +
                         " but the cache has d=" + std::to_string(cache.dims()));
}

void
require_surface_level(double alpha)
{
  if (!(alpha >= 0.5 && alpha < 1.0))
    throw DomainError("surface level alpha must lie in [1/2, 1)");
}

} // namespace

double
directional_quantile(const ProjectionCache& cache,
                     const Point& observer,
                     std::size_t u_index,
                     double alpha)
{
  require_observer(cache, observer);
  const double offset = empirical_quantile(cache, u_index, alpha);
  return offset - dot(as_span(observer), cache.grid()[u_index].span());
}

QuantileSurface
quantile_surface(const ProjectionCache& cache, const Point& observer, double alpha)
{
  require_surface_level(alpha);
  require_observer(cache, observer);
  const auto& grid = cache.grid();
  if (grid.size() == 0)
    throw ConfigurationError("direction grid is empty");
  QuantileSurface s;
  s.observer = observer;
  s.alpha = alpha;
  s.scheme = grid.scheme();
  s.entries.reserve(grid.size());
  const std::size_t rank = quantile_rank(cache.n(), alpha);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto& u = grid[j];
    const double y =
      cache.projections(j)[rank - 1] - dot(as_span(observer), u.span());
    s.entries.push_back({ u, y, observer + y * u.vector() });
  }
  return s;
}

QuantileSurface
transfer_surface(const QuantileSurface& surface, const Point& new_observer)
{
  require_finite(new_observer, "observer");
  if (new_observer.size() != surface.observer.size())
    throw DimensionError("transfer target has a different dimension");
  const Point shift = new_observer - surface.observer;
  QuantileSurface out;
  out.observer = new_observer;
  out.alpha = surface.alpha;
  out.scheme = surface.scheme;
  out.entries.reserve(surface.entries.size());
  for (const auto& e : surface.entries) {
    const double y = e.y - dot(as_span(shift), e.u.span());
    // equal to q + shift - <shift,u> u
    out.entries.push_back({ e.u, y, new_observer + y * e.u.vector() });
  }
  return out;
}

double
quantile_halfspace_mass(const ProjectionCache& cache,
                        const Point& observer,
                        std::size_t u_index,
                        double alpha)
{
  require_observer(cache, observer);
  // the half-space H_n(u, alpha) is observer-free; use its canonical offset
  const auto proj = cache.projections(u_index);
  return empirical_cdf(proj, empirical_quantile(proj, alpha));
}

double
psi_hat(const ProjectionCache& cache,
        const Point& observer,
        double eps,
        const DeltaRange& delta)
{
  require_observer(cache, observer);
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw DomainError("band width eps must be positive");
  const std::size_t n = cache.n();
  const std::size_t lo_rank = quantile_rank(n, delta.alpha_minus);
  const std::size_t hi_rank = quantile_rank(n, delta.alpha_plus);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  bool admissible = false;
  for (std::size_t j = 0; j < cache.grid().size(); ++j) {
    const auto p = cache.projections(j);
    const double lo = p[lo_rank - 1];
    const double hi = p[hi_rank - 1];
    if (lo + eps > hi)
      continue;
    admissible = true;
    // The count of (c, c+eps] is right-continuous and piecewise constant in
    // c, so its minimum over [lo, hi-eps] sits at lo or at a data point.
    std::size_t right = lo_rank - 1;
    std::size_t i = lo_rank - 1;
    while (i < n && p[i] + eps <= hi) {
      const double c = p[i];
      std::size_t left = i;
      while (left < n && p[left] <= c)
        ++left;
      const double top = c + eps;
      if (right < left)
        right = left;
      while (right < n && p[right] <= top)
        ++right;
      best = std::min(best, right - left);
      i = left;
    }
  }
  if (!admissible)
    throw NoAdmissibleBand("no admissible band of width " + std::to_string(eps) +
                           ": eps exceeds every admissible range");
  return static_cast<double>(best) / static_cast<double>(n);
}

TukeyRegion2D
tukey_region_2d(const ProjectionCache& cache, double alpha)
{
  if (cache.dims() != 2)
    throw DimensionError("Tukey regions are computed in d = 2 only");
  const auto& pts = cache.dataset().points();
  const Eigen::Vector2d lo = pts.colwise().minCoeff().transpose();
  const Eigen::Vector2d hi = pts.colwise().maxCoeff().transpose();
  const double margin = std::max(1.0, (hi - lo).maxCoeff());
  std::vector<Eigen::Vector2d> poly = {
    { lo.x() - margin, lo.y() - margin },
    { hi.x() + margin, lo.y() - margin },
    { hi.x() + margin, hi.y() + margin },
    { lo.x() - margin, hi.y() + margin },
  };
  const double tol = 1e-12 * (1.0 + margin + hi.cwiseAbs().maxCoeff() +
                              lo.cwiseAbs().maxCoeff());

  const std::size_t rank = quantile_rank(cache.n(), alpha);
  for (std::size_t j = 0; j < cache.grid().size() && !poly.empty(); ++j) {
    const Eigen::Vector2d u = cache.grid()[j].vector();
    const double c = cache.projections(j)[rank - 1];
    std::vector<Eigen::Vector2d> next;
    next.reserve(poly.size() + 1);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& a = poly[i];
      const auto& b = poly[(i + 1) % poly.size()];
      const double da = a.dot(u) - c;
      const double db = b.dot(u) - c;
      if (da <= 0.0)
        next.push_back(a);
      if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0))
        next.push_back(a + (b - a) * (da / (da - db)));
    }
    // drop repeated vertices
    std::vector<Eigen::Vector2d> clean;
    for (const auto& v : next)
      if (clean.empty() || (v - clean.back()).norm() > tol)
        clean.push_back(v);
    while (clean.size() > 1 && (clean.front() - clean.back()).norm() <= tol)
      clean.pop_back();
    poly = clean.size() >= 3 ? std::move(clean) : std::vector<Eigen::Vector2d>{};
  }
  return TukeyRegion2D{ alpha, std::move(poly) };
}

double
hausdorff_distance(const QuantileSurface& a, const QuantileSurface& b)
{
  if (a.dims() != b.dims())
    throw DimensionError("surfaces have different dimensions");
  if (a.entries.empty() || b.entries.empty())
    throw DomainError("Hausdorff distance of an empty surface");
  auto directed = [](const QuantileSurface& from, const QuantileSurface& to) {
    double worst = 0.0;
    for (const auto& e : from.entries) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& f : to.entries)
        nearest = std::min(nearest, (e.q - f.q).squaredNorm());
      worst = std::max(worst, nearest);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

double
median_antipodal_gap(const ProjectionCache& cache, const Point& observer)
{
  require_observer(cache, observer);
  const auto& grid = cache.grid();
  if (!grid.exact_antipodes())
    throw ConfigurationError("median gap needs a grid with exact antipodes");
  double gap = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double forward = directional_quantile(cache, observer, j, 0.5);
    const double backward = directional_quantile(cache, observer, grid.antipode(j), 0.5);
    gap = std::max(gap, std::abs(forward + backward));
  }
  return gap;
}

} // namespace qsurf
