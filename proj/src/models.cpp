#include "qsurf/models.hpp"

#include "qsurf/error.hpp"
#include "qsurf/rng.hpp"

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace qsurf {

namespace {

template<class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};

Eigen::MatrixXd
cholesky_or_throw(const Eigen::MatrixXd& cov, Eigen::Index dims)
{
  if (cov.rows() != dims || cov.cols() != dims)
    throw DimensionError("covariance must be " + std::to_string(dims) + "x" +
                         std::to_string(dims));
  if (!cov.allFinite())
    throw DomainError("covariance has non-finite entries");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw DomainError("covariance is not positive definite");
  Eigen::MatrixXd l = llt.matrixL();
  if ((l.diagonal().array() <= 0.0).any())
    throw DomainError("covariance is not positive definite");
  return l;
}

void
check_component(const GaussianComponent& c)
{
  require_finite(c.mean, "mean");
}

double
std_normal_cdf(double z)
{
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double
std_normal_pdf(double z)
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double
std_normal_quantile(double alpha)
{
  return boost::math::quantile(boost::math::normal_distribution<double>(), alpha);
}

Point
json_point(const nlohmann::json& j, const char* what)
{
  if (!j.is_array() || j.empty())
    throw ParseError(std::string(what) + " must be a non-empty array");
  Point p(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    p[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  return p;
}

Eigen::MatrixXd
json_matrix(const nlohmann::json& j, Eigen::Index dims)
{
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dims)
    throw ParseError("cov must be a " + std::to_string(dims) + "x" +
                     std::to_string(dims) + " array");
  Eigen::MatrixXd m(dims, dims);
  for (Eigen::Index r = 0; r < dims; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dims)
      throw ParseError("cov rows must have " + std::to_string(dims) + " entries");
    for (Eigen::Index c = 0; c < dims; ++c)
      m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

nlohmann::ordered_json
point_json(const Point& p)
{
  auto arr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i)
    arr.push_back(p[i]);
  return arr;
}

nlohmann::ordered_json
matrix_json(const Eigen::MatrixXd& m)
{
  auto arr = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(m(r, c));
    arr.push_back(row);
  }
  return arr;
}

GaussianComponent
component_from_json(const nlohmann::json& j)
{
  GaussianComponent c;
  c.mean = json_point(j.at("mean"), "mean");
  if (j.contains("cov"))
    c.cov = json_matrix(j.at("cov"), c.mean.size());
  else
    c.cov = Eigen::MatrixXd::Identity(c.mean.size(), c.mean.size());
  return c;
}

} // namespace

ModelSpec::ModelSpec(Kind kind, int dims)
  : kind_(std::move(kind))
  , dims_(dims)
{
  std::visit(overloaded{
               [&](const GaussianModel& g) {
                 check_component(g.component);
                 factors_.push_back(cholesky_or_throw(g.component.cov, dims_));
               },
               [&](const GaussianMixtureModel& m) {
                 if (m.components.empty() || m.components.size() != m.weights.size())
                   throw DomainError("mixture needs one weight per component");
                 double total = 0.0;
                 for (double w : m.weights) {
                   if (!(w >= 0.0))
                     throw DomainError("mixture weights must be non-negative");
                   total += w;
                 }
                 if (std::abs(total - 1.0) > 1e-12)
                   throw DomainError("mixture weights must sum to 1");
                 for (const auto& c : m.components) {
                   if (c.mean.size() != dims_)
                     throw DimensionError("mixture components disagree on dimension");
                   check_component(c);
                   factors_.push_back(cholesky_or_throw(c.cov, dims_));
                 }
               },
               [&](const UniformDiskModel& d) {
                 require_finite(d.center, "disk center");
                 if (d.center.size() != 2)
                   throw DimensionError("uniform disk is two-dimensional");
                 if (!(d.radius > 0.0) || !std::isfinite(d.radius))
                   throw DomainError("disk radius must be positive");
               },
               [&](const UniformSpiralModel& s) {
                 if (!(s.turns > 0.0) || !(s.scale > 0.0) || !(s.thickness >= 0.0))
                   throw DomainError("spiral needs turns > 0, scale > 0, thickness >= 0");
               },
               [&](const UniformBoxModel& b) {
                 require_finite(b.lower, "box lower corner");
                 require_finite(b.upper, "box upper corner");
                 if (b.lower.size() != b.upper.size())
                   throw DimensionError("box corners disagree on dimension");
                 if (((b.upper - b.lower).array() <= 0.0).any())
                   throw DomainError("box must have positive extent");
               } },
             kind_);
}

ModelSpec
ModelSpec::gaussian(Point mean, Eigen::MatrixXd cov)
{
  const int d = static_cast<int>(mean.size());
  return ModelSpec(GaussianModel{ { std::move(mean), std::move(cov) } }, d);
}

ModelSpec
ModelSpec::standard_gaussian(int dims)
{
  return gaussian(Point::Zero(dims), Eigen::MatrixXd::Identity(dims, dims));
}

ModelSpec
ModelSpec::mixture(std::vector<GaussianComponent> components, std::vector<double> weights)
{
  if (components.empty())
    throw DomainError("mixture needs at least one component");
  const int d = static_cast<int>(components.front().mean.size());
  return ModelSpec(GaussianMixtureModel{ std::move(components), std::move(weights) }, d);
}

ModelSpec
ModelSpec::uniform_disk(Point center, double radius)
{
  const int d = static_cast<int>(center.size());
  return ModelSpec(UniformDiskModel{ std::move(center), radius }, d);
}

ModelSpec
ModelSpec::uniform_spiral(double turns, double thickness, double scale)
{
  return ModelSpec(UniformSpiralModel{ turns, thickness, scale }, 2);
}

ModelSpec
ModelSpec::uniform_box(Point lower, Point upper)
{
  const int d = static_cast<int>(lower.size());
  return ModelSpec(UniformBoxModel{ std::move(lower), std::move(upper) }, d);
}

ModelSpec
ModelSpec::from_json(const nlohmann::json& doc)
{
  try {
    const std::string kind = doc.at("kind").get<std::string>();
    ModelSpec out = [&] {
      if (kind == "gaussian") {
        if (!doc.contains("mean")) {
          return standard_gaussian(doc.at("dims").get<int>());
        }
        const auto c = component_from_json(doc);
        return gaussian(c.mean, c.cov);
      }
      if (kind == "gaussian-mixture") {
        std::vector<GaussianComponent> comps;
        for (const auto& c : doc.at("components"))
          comps.push_back(component_from_json(c));
        return mixture(std::move(comps), doc.at("weights").get<std::vector<double>>());
      }
      if (kind == "uniform-disk")
        return uniform_disk(json_point(doc.at("center"), "center"),
                            doc.at("radius").get<double>());
      if (kind == "uniform-spiral")
        return uniform_spiral(doc.value("turns", 3.0),
                              doc.value("thickness", 0.0),
                              doc.value("scale", 1.0));
      if (kind == "uniform-box")
        return uniform_box(json_point(doc.at("lower"), "lower"),
                           json_point(doc.at("upper"), "upper"));
      throw ParseError("unknown model kind '" + kind + "'");
    }();
    if (doc.contains("dims") && doc.at("dims").get<int>() != out.dims())
      throw DimensionError("model dims field disagrees with its parameters");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
}

nlohmann::ordered_json
ModelSpec::to_json() const
{
  nlohmann::ordered_json j;
  j["kind"] = std::string(kind_name());
  j["dims"] = dims_;
  std::visit(overloaded{
               [&](const GaussianModel& g) {
                 j["mean"] = point_json(g.component.mean);
                 j["cov"] = matrix_json(g.component.cov);
               },
               [&](const GaussianMixtureModel& m) {
                 auto comps = nlohmann::ordered_json::array();
                 for (const auto& c : m.components) {
                   nlohmann::ordered_json cj;
                   cj["mean"] = point_json(c.mean);
                   cj["cov"] = matrix_json(c.cov);
                   comps.push_back(cj);
                 }
                 j["components"] = comps;
                 j["weights"] = m.weights;
               },
               [&](const UniformDiskModel& d) {
                 j["center"] = point_json(d.center);
                 j["radius"] = d.radius;
               },
               [&](const UniformSpiralModel& s) {
                 j["turns"] = s.turns;
                 j["thickness"] = s.thickness;
                 j["scale"] = s.scale;
               },
               [&](const UniformBoxModel& b) {
                 j["lower"] = point_json(b.lower);
                 j["upper"] = point_json(b.upper);
               } },
             kind_);
  return j;
}

std::string_view
ModelSpec::kind_name() const
{
  return std::visit(overloaded{ [](const GaussianModel&) { return "gaussian"; },
                                [](const GaussianMixtureModel&) { return "gaussian-mixture"; },
                                [](const UniformDiskModel&) { return "uniform-disk"; },
                                [](const UniformSpiralModel&) { return "uniform-spiral"; },
                                [](const UniformBoxModel&) { return "uniform-box"; } },
                    kind_);
}

bool
ModelSpec::has_analytic_projection() const
{
  return std::holds_alternative<GaussianModel>(kind_) ||
         std::holds_alternative<GaussianMixtureModel>(kind_) ||
         std::holds_alternative<UniformDiskModel>(kind_);
}

ProjectedLaw::ProjectedLaw(const ModelSpec& model, const Direction& u)
{
  if (u.dims() != model.dims())
    throw DimensionError("direction and model dimensions differ");
  auto add = [&](double w, const GaussianComponent& c) {
    const double mean = dot(as_span(c.mean), u.span());
    const double var = u.vector().dot(c.cov * u.vector());
    normals_.push_back({ w, mean, std::sqrt(var) });
  };
  std::visit(overloaded{
               [&](const GaussianModel& g) { add(1.0, g.component); },
               [&](const GaussianMixtureModel& m) {
                 for (std::size_t i = 0; i < m.components.size(); ++i)
                   add(m.weights[i], m.components[i]);
               },
               [&](const UniformDiskModel& d) {
                 disk_ = true;
                 disk_center_ = dot(as_span(d.center), u.span());
                 disk_radius_ = d.radius;
               },
               [&](const UniformSpiralModel&) {
                 throw CapabilityError("uniform-spiral has no analytic projected law");
               },
               [&](const UniformBoxModel&) {
                 throw CapabilityError("uniform-box has no analytic projected law");
               } },
             model.kind());
}

double
ProjectedLaw::cdf(double t) const
{
  if (disk_) {
    const double s = (t - disk_center_) / disk_radius_;
    if (s <= -1.0)
      return 0.0;
    if (s >= 1.0)
      return 1.0;
    return 0.5 + (s * std::sqrt(1.0 - s * s) + std::asin(s)) / std::numbers::pi;
  }
  double p = 0.0;
  for (const auto& c : normals_)
    p += c.weight * std_normal_cdf((t - c.mean) / c.sd);
  return p;
}

double
ProjectedLaw::pdf(double t) const
{
  if (disk_) {
    const double s = (t - disk_center_) / disk_radius_;
    if (s <= -1.0 || s >= 1.0)
      return 0.0;
    return 2.0 / (std::numbers::pi * disk_radius_) * std::sqrt(1.0 - s * s);
  }
  double f = 0.0;
  for (const auto& c : normals_)
    f += c.weight * std_normal_pdf((t - c.mean) / c.sd) / c.sd;
  return f;
}

double
ProjectedLaw::quantile(double alpha) const
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("population quantile level must lie in (0, 1)");
  if (!disk_ && normals_.size() == 1)
    return normals_[0].mean + normals_[0].sd * std_normal_quantile(alpha);
  double lo, hi;
  if (disk_) {
    lo = disk_center_ - disk_radius_;
    hi = disk_center_ + disk_radius_;
  } else {
    double max_sd = 0.0;
    lo = hi = normals_[0].mean;
    for (const auto& c : normals_) {
      max_sd = std::max(max_sd, c.sd);
      lo = std::min(lo, c.mean);
      hi = std::max(hi, c.mean);
    }
    lo -= 12.0 * max_sd;
    hi += 12.0 * max_sd;
  }
  // invariant: cdf(lo) < alpha <= cdf(hi)
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    if (cdf(mid) >= alpha)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

namespace {

Point
draw_gaussian(Rng& rng, const Point& mean, const Eigen::MatrixXd& factor)
{
  const Eigen::Index d = mean.size();
  Point z(d);
  for (Eigen::Index i = 0; i < d; ++i)
    z[i] = rng.normal();
  return mean + factor.triangularView<Eigen::Lower>() * z;
}

// Arc length of r = a * theta from 0 to theta.
double
spiral_arc_length(double a, double theta)
{
  return 0.5 * a * (theta * std::sqrt(1.0 + theta * theta) + std::asinh(theta));
}

} // namespace

LabeledSample
sample_labeled(const ModelSpec& model,
               std::size_t n,
               std::uint64_t seed,
               std::uint64_t stream)
{
  if (n < 1)
    throw DomainError("sample size must be at least 1");
  Rng rng(seed, stream);
  const int d = model.dims();
  RowMatrix m(static_cast<Eigen::Index>(n), d);
  std::vector<int> labels(n, 0);
  std::visit(
    overloaded{
      [&](const GaussianModel& g) {
        const auto& l = model.factors()[0];
        const bool identity = l.isIdentity(0.0);
        for (std::size_t i = 0; i < n; ++i) {
          if (identity) {
            for (int c = 0; c < d; ++c)
              m(static_cast<Eigen::Index>(i), c) = g.component.mean[c] + rng.normal();
          } else {
            m.row(static_cast<Eigen::Index>(i)) =
              draw_gaussian(rng, g.component.mean, l).transpose();
          }
        }
      },
      [&](const GaussianMixtureModel& mix) {
        std::vector<double> cumulative;
        double acc = 0.0;
        for (double w : mix.weights)
          cumulative.push_back(acc += w);
        for (std::size_t i = 0; i < n; ++i) {
          const double pick = rng.uniform() * acc;
          std::size_t k = 0;
          while (k + 1 < cumulative.size() && pick >= cumulative[k])
            ++k;
          labels[i] = static_cast<int>(k);
          m.row(static_cast<Eigen::Index>(i)) =
            draw_gaussian(rng, mix.components[k].mean, model.factors()[k]).transpose();
        }
      },
      [&](const UniformDiskModel& disk) {
        for (std::size_t i = 0; i < n; ++i) {
          const double r = disk.radius * std::sqrt(rng.uniform());
          const double theta = 2.0 * std::numbers::pi * rng.uniform();
          m(static_cast<Eigen::Index>(i), 0) = disk.center[0] + r * std::cos(theta);
          m(static_cast<Eigen::Index>(i), 1) = disk.center[1] + r * std::sin(theta);
        }
      },
      [&](const UniformSpiralModel& s) {
        const double a = s.scale / (2.0 * std::numbers::pi);
        const double theta_max = 2.0 * std::numbers::pi * s.turns;
        const double total = spiral_arc_length(a, theta_max);
        for (std::size_t i = 0; i < n; ++i) {
          const double target = total * rng.uniform();
          double lo = 0.0, hi = theta_max;
          for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (spiral_arc_length(a, mid) < target ? lo : hi) = mid;
          }
          const double theta = 0.5 * (lo + hi);
          const double jitter = s.thickness * (rng.uniform() - 0.5);
          const double r = a * theta + jitter;
          m(static_cast<Eigen::Index>(i), 0) = r * std::cos(theta);
          m(static_cast<Eigen::Index>(i), 1) = r * std::sin(theta);
        }
      },
      [&](const UniformBoxModel& b) {
        for (std::size_t i = 0; i < n; ++i)
          for (int c = 0; c < d; ++c)
            m(static_cast<Eigen::Index>(i), c) = rng.uniform(b.lower[c], b.upper[c]);
      } },
    model.kind());
  return { Dataset(std::move(m),
                   std::string(model.kind_name()),
                   "simulated seed=" + std::to_string(seed) +
                     " stream=" + std::to_string(stream)),
           std::move(labels) };
}

Dataset
sample(const ModelSpec& model, std::size_t n, std::uint64_t seed, std::uint64_t stream)
{
  return sample_labeled(model, n, seed, stream).data;
}

double
true_directional_quantile(const ModelSpec& model,
                          const Point& observer,
                          const Direction& u,
                          double alpha)
{
  require_finite(observer, "observer");
  if (observer.size() != model.dims())
    throw DimensionError("observer and model dimensions differ");
  const ProjectedLaw law(model, u);
  return law.quantile(alpha) - dot(as_span(observer), u.span());
}

double
true_h(const ModelSpec& model, const Direction& u, double alpha)
{
  const ProjectedLaw law(model, u);
  return law.pdf(law.quantile(alpha));
}

namespace {

constexpr std::uint64_t kMonteCarloStream = 0x6d632d696e746572ULL;

void
require_mc_size(std::size_t mc_n)
{
  if (mc_n < 10000)
    throw DomainError("Monte Carlo size must be at least 1e4");
}

} // namespace

McEstimate
intersection_prob(const ModelSpec& model,
                  const HalfSpace& h1,
                  const HalfSpace& h2,
                  std::size_t mc_n,
                  std::uint64_t seed)
{
  const auto probs = intersection_probs(model, { h1, h2 }, mc_n, seed);
  const double p = probs(0, 1);
  return { p, std::sqrt(p * (1.0 - p) / static_cast<double>(mc_n)) };
}

Eigen::MatrixXd
intersection_probs(const ModelSpec& model,
                   const std::vector<HalfSpace>& halfspaces,
                   std::size_t mc_n,
                   std::uint64_t seed)
{
  require_mc_size(mc_n);
  for (const auto& h : halfspaces)
    if (h.u.dims() != model.dims())
      throw DimensionError("half-space and model dimensions differ");
  const std::size_t m = halfspaces.size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                 static_cast<Eigen::Index>(m));
  // draw in chunks so memory stays bounded for large mc_n
  constexpr std::size_t kChunk = 1 << 16;
  const std::size_t words = (kChunk + 63) / 64;
  std::vector<std::uint64_t> bits(m * words);
  std::size_t done = 0;
  std::uint64_t chunk_id = 0;
  while (done < mc_n) {
    const std::size_t len = std::min(kChunk, mc_n - done);
    const Dataset draws = sample(model, len, seed, kMonteCarloStream + chunk_id++);
    std::fill(bits.begin(), bits.end(), 0);
    for (std::size_t h = 0; h < m; ++h)
      for (std::size_t i = 0; i < len; ++i)
        if (halfspaces[h].contains(draws.row(i)))
          bits[h * words + i / 64] |= std::uint64_t{ 1 } << (i % 64);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) {
        std::size_t c = 0;
        for (std::size_t w = 0; w < words; ++w)
          c += static_cast<std::size_t>(std::popcount(bits[a * words + w] & bits[b * words + w]));
        counts(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += static_cast<double>(c);
      }
    done += len;
  }
  Eigen::MatrixXd probs = counts / static_cast<double>(mc_n);
  probs.triangularView<Eigen::StrictlyLower>() = probs.transpose();
  return probs;
}

double
rho_gamma(const ModelSpec& model,
          double gamma,
          const DirectionGrid& grid,
          const DeltaRange& delta,
          int alpha_steps)
{
  if (!(gamma > 0.0 && gamma < kRhoGammaMax))
    throw DomainError("gamma must lie in (0, 1)");
  if (!model.has_analytic_projection())
    throw CapabilityError(std::string(model.kind_name()) +
                          " has no analytic projected law");
  const auto alphas = delta.grid(alpha_steps);
  constexpr int half = (kRhoOffsetSteps - 1) / 2;
  double worst = 0.0;
  for (const auto& u : grid.directions()) {
    const ProjectedLaw law(model, u);
    for (double alpha : alphas) {
      const double y = law.quantile(alpha);
      const double h = law.pdf(y);
      for (int j = -half; j <= half; ++j) {
        const double e = gamma * j / (half + 1);
        worst = std::max(worst, std::abs(law.cdf(y + e) - alpha - h * e));
      }
    }
  }
  return worst;
}

} // namespace qsurf
