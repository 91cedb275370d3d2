#pragma once

#include "qsurf/geometry.hpp"
#include "qsurf/quantiles.hpp"
#include "qsurf/samples.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

namespace qsurf {

struct GaussianComponent
{
  Point mean;
  Eigen::MatrixXd cov;
};

struct GaussianModel
{
  GaussianComponent component;
};

struct GaussianMixtureModel
{
  std::vector<GaussianComponent> components;
  std::vector<double> weights;
};

struct UniformDiskModel
{
  Point center;
  double radius = 1.0;
};

//! Uniform law on an Archimedean spiral r = scale * theta / (2 pi), with
//! optional radial thickness. Sample-only.
struct UniformSpiralModel
{
  double turns = 3.0;
  double thickness = 0.0;
  double scale = 1.0;
};

//! Uniform law on an axis-aligned box. Sample-only.
struct UniformBoxModel
{
  Point lower;
  Point upper;
};

/// Analytic distribution used for simulation and as a population oracle.
///
/// Gaussian, mixture and disk kinds have closed-form projected laws; spiral
/// and box are sample-only and raise CapabilityError from every oracle.
class ModelSpec
{
public:
  using Kind = std::variant<GaussianModel,
                            GaussianMixtureModel,
                            UniformDiskModel,
                            UniformSpiralModel,
                            UniformBoxModel>;

  static ModelSpec gaussian(Point mean, Eigen::MatrixXd cov);
  static ModelSpec standard_gaussian(int dims);
  static ModelSpec mixture(std::vector<GaussianComponent> components,
                           std::vector<double> weights);
  static ModelSpec uniform_disk(Point center, double radius);
  static ModelSpec uniform_spiral(double turns, double thickness, double scale = 1.0);
  static ModelSpec uniform_box(Point lower, Point upper);

  static ModelSpec from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;

  int dims() const { return dims_; }
  std::string_view kind_name() const;
  const Kind& kind() const { return kind_; }
  bool has_analytic_projection() const;

  //! Lower Cholesky factors, one per Gaussian component (empty for other kinds).
  const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }

private:
  ModelSpec(Kind kind, int dims);

  Kind kind_;
  int dims_;
  std::vector<Eigen::MatrixXd> factors_;
};

//! The one-dimensional law of <X,u>.
class ProjectedLaw
{
public:
  //! Throws CapabilityError for sample-only models.
  ProjectedLaw(const ModelSpec& model, const Direction& u);

  double cdf(double t) const;
  double pdf(double t) const;
  //! inf{t : cdf(t) >= alpha}, alpha in (0,1).
  double quantile(double alpha) const;

private:
  struct Normal1d
  {
    double weight, mean, sd;
  };
  std::vector<Normal1d> normals_;
  bool disk_ = false;
  double disk_center_ = 0.0;
  double disk_radius_ = 1.0;
};

struct LabeledSample
{
  Dataset data;
  std::vector<int> component; //!< mixture component per row (0 otherwise)
};

//! n i.i.d. draws, deterministic in (seed, stream).
Dataset sample(const ModelSpec& model, std::size_t n, std::uint64_t seed, std::uint64_t stream = 0);
LabeledSample sample_labeled(const ModelSpec& model,
                             std::size_t n,
                             std::uint64_t seed,
                             std::uint64_t stream = 0);

//! Y(O,u,alpha) = F^{-1}_{<X,u>}(alpha) - <O,u>.
double true_directional_quantile(const ModelSpec& model,
                                 const Point& observer,
                                 const Direction& u,
                                 double alpha);

//! Density-quantile h(u, alpha) = f(F^{-1}(alpha)) of the projection.
double true_h(const ModelSpec& model, const Direction& u, double alpha);

struct McEstimate
{
  double value;
  double std_error;
};

//! Monte Carlo P(H1 and H2) from mc_n draws; std_error <= 1/(2 sqrt(mc_n)).
McEstimate intersection_prob(const ModelSpec& model,
                             const HalfSpace& h1,
                             const HalfSpace& h2,
                             std::size_t mc_n,
                             std::uint64_t seed);

/// Batched variant over many half-spaces: P(H_i and H_j) for every pair from
/// one shared Monte Carlo sample.
Eigen::MatrixXd intersection_probs(const ModelSpec& model,
                                   const std::vector<HalfSpace>& halfspaces,
                                   std::size_t mc_n,
                                   std::uint64_t seed);

//! Number of points in the symmetric offset grid used by rho_gamma.
inline constexpr int kRhoOffsetSteps = 401;

/// sup |F(Y + e) - alpha - h e| over grid directions, `alpha_steps` levels of
/// delta and offsets e on a symmetric grid strictly inside (-gamma, gamma).
double rho_gamma(const ModelSpec& model,
                 double gamma,
                 const DirectionGrid& grid,
                 const DeltaRange& delta,
                 int alpha_steps);

//! Largest gamma accepted by rho_gamma.
inline constexpr double kRhoGammaMax = 1.0;

} // namespace qsurf
