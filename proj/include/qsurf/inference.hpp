#pragma once

#include "qsurf/models.hpp"
#include "qsurf/quantiles.hpp"
#include "qsurf/samples.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

namespace qsurf {

/// Density-quantile estimate from a symmetric difference quotient of the
/// empirical quantile function:
///   h_hat = 2b / (F_n^{-1}(alpha + b) - F_n^{-1}(alpha - b)).
/// A zero denominator (ties) doubles b up to four times before giving up.
struct HEstimate
{
  double h_hat;
  double bandwidth; //!< bandwidth actually used after any widening
};

HEstimate estimate_h(const ProjectionCache& cache,
                     std::size_t u_index,
                     double alpha,
                     double bandwidth);

//! n^{-1/3} clamped to [2/n, min(alpha, 1-alpha)/2].
double default_bandwidth(std::size_t n, double alpha);

//! E_n(u, alpha) = sqrt(n) (P_n(H(u, alpha)) - alpha) with the true half-space.
double empirical_process_at_quantile(const ProjectionCache& cache,
                                     const ModelSpec& model,
                                     std::size_t u_index,
                                     double alpha);

//! b_n = n^{-1/4} (log n)^{1/2} (log log n)^{1/4}; requires n >= 3.
double bahadur_kiefer_rate(std::size_t n);

struct BKResidualReport
{
  std::size_t n = 0;
  double sup_residual = 0.0;
  double b_n = 0.0;
  double ratio = 0.0;
};

//! sup over the grid and the level grid of |sqrt(n)(Y_n - Y) + E_n / h|, h from the oracle.
BKResidualReport bk_residual(const ProjectionCache& cache,
                             const ModelSpec& model,
                             const DeltaRange& delta,
                             int alpha_steps);

struct GridPoint
{
  std::size_t u_index;
  double alpha;
};

struct CovarianceMatrix
{
  std::vector<GridPoint> points;
  Eigen::MatrixXd matrix;
  double jitter_applied = 0.0;
  double min_eigenvalue = 0.0; //!< before jitter
};

/// Sigma_ij = (P(H_i and H_j) - alpha_i alpha_j) / (h_i h_j). The diagonal
/// uses P(H_i) = alpha_i, so Sigma_ii = alpha_i (1 - alpha_i) / h_i^2.
/// A negative smallest eigenvalue is lifted by a diagonal ridge.
CovarianceMatrix build_covariance(const std::vector<GridPoint>& points,
                                  const Eigen::MatrixXd& probs,
                                  const std::vector<double>& h);

//! draws x k matrix; each row is L z with L L^T = Sigma.
Eigen::MatrixXd sample_gaussian_field(const CovarianceMatrix& cov,
                                      std::size_t draws,
                                      std::uint64_t seed);

struct BandOptions
{
  double level = 0.95;
  std::size_t draws = 2000;
  std::uint64_t seed = 0;
  double bandwidth = 0.0; //!< <= 0 selects default_bandwidth
  bool studentized = false;
};

struct ConfidenceBand
{
  QuantileSurface surface;
  double level = 0.0;
  std::vector<double> halfwidth;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  double jitter_applied = 0.0;
  double critical_value = 0.0;
  bool studentized = false;
  std::vector<double> h_hat;
};

/// Joint band around Y_n(O, ., alpha) over every grid direction from the
/// plug-in Gaussian field: c* is the level-quantile of max_u |G(u)| (or of
/// max_u |G(u)| / sigma(u) when studentized) and halfwidth(u) = c* / sqrt(n)
/// (times sigma(u) when studentized).
ConfidenceBand confidence_band(const ProjectionCache& cache,
                               const Point& observer,
                               double alpha,
                               const BandOptions& options);

} // namespace qsurf
