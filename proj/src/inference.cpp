#include "qsurf/inference.hpp"

#include "qsurf/error.hpp"
#include "qsurf/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>

namespace qsurf {

HEstimate
estimate_h(const ProjectionCache& cache, std::size_t u_index, double alpha, double bandwidth)
{
  const auto p = cache.projections(u_index);
  const double n = static_cast<double>(cache.n());
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw DomainError("bandwidth must be positive");
  if (!(alpha - bandwidth > 0.0 && alpha + bandwidth < 1.0))
    throw DomainError("[alpha - b, alpha + b] must lie inside (0, 1)");
  if (!(bandwidth > 1.0 / n))
    throw DomainError("bandwidth must exceed 1/n");
  if (p.front() == p.back())
    throw EstimationError("projections are degenerate (all equal)");
  double b = bandwidth;
  for (int widen = 0;; ++widen) {
    const double spread = empirical_quantile(p, alpha + b) - empirical_quantile(p, alpha - b);
    if (spread > 0.0)
      return { 2.0 * b / spread, b };
    if (widen == 4)
      break;
    b *= 2.0;
    if (!(alpha - b > 0.0 && alpha + b < 1.0))
      throw EstimationError("tied quantiles: widening the bandwidth leaves (0, 1)");
  }
  throw EstimationError("tied quantiles persist after widening the bandwidth");
}

double
default_bandwidth(std::size_t n, double alpha)
{
  const double nd = static_cast<double>(n);
  const double lower = 2.0 / nd;
  const double upper = std::min(alpha, 1.0 - alpha) / 2.0;
  if (!(lower <= upper))
    throw DomainError("sample too small for a bandwidth at this alpha");
  return std::clamp(std::cbrt(1.0 / nd), lower, upper);
}

double
empirical_process_at_quantile(const ProjectionCache& cache,
                              const ModelSpec& model,
                              std::size_t u_index,
                              double alpha)
{
  const ProjectedLaw law(model, cache.grid()[u_index]);
  const double c = law.quantile(alpha);
  const double n = static_cast<double>(cache.n());
  return std::sqrt(n) * (empirical_cdf(cache, u_index, c) - alpha);
}

double
bahadur_kiefer_rate(std::size_t n)
{
  if (n < 3)
    throw DomainError("log log n needs n >= 3");
  const double nd = static_cast<double>(n);
  const double ln = std::log(nd);
  return std::pow(nd, -0.25) * std::sqrt(ln) * std::pow(std::log(ln), 0.25);
}

BKResidualReport
bk_residual(const ProjectionCache& cache,
            const ModelSpec& model,
            const DeltaRange& delta,
            int alpha_steps)
{
  BKResidualReport r;
  r.n = cache.n();
  r.b_n = bahadur_kiefer_rate(r.n);
  const double root_n = std::sqrt(static_cast<double>(r.n));
  const auto alphas = delta.grid(alpha_steps);
  for (std::size_t j = 0; j < cache.grid().size(); ++j) {
    const ProjectedLaw law(model, cache.grid()[j]);
    const auto p = cache.projections(j);
    for (double alpha : alphas) {
      const double y = law.quantile(alpha);
      const double h = law.pdf(y);
      const double e_n = root_n * (empirical_cdf(p, y) - alpha);
      const double residual = root_n * (empirical_quantile(p, alpha) - y) + e_n / h;
      r.sup_residual = std::max(r.sup_residual, std::abs(residual));
    }
  }
  r.ratio = r.sup_residual / r.b_n;
  return r;
}

CovarianceMatrix
build_covariance(const std::vector<GridPoint>& points,
                 const Eigen::MatrixXd& probs,
                 const std::vector<double>& h)
{
  const auto k = static_cast<Eigen::Index>(points.size());
  if (probs.rows() != k || probs.cols() != k || static_cast<Eigen::Index>(h.size()) != k)
    throw DimensionError("covariance inputs disagree on the number of points");
  for (double v : h)
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("density-quantile values must be positive");
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      const double p = probs(i, j);
      if (!(p >= 0.0 && p <= 1.0))
        throw DomainError("intersection probabilities must lie in [0, 1]");
      if (std::abs(p - probs(j, i)) > 1e-12)
        throw DomainError("intersection probabilities must be symmetric");
    }

  CovarianceMatrix out;
  out.points = points;
  out.matrix.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double ai = points[static_cast<std::size_t>(i)].alpha;
    const double hi = h[static_cast<std::size_t>(i)];
    out.matrix(i, i) = ai * (1.0 - ai) / (hi * hi);
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double aj = points[static_cast<std::size_t>(j)].alpha;
      const double v = (probs(i, j) - ai * aj) / (hi * h[static_cast<std::size_t>(j)]);
      out.matrix(i, j) = v;
      out.matrix(j, i) = v;
    }
  }
  if (k > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.matrix, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    if (out.min_eigenvalue < 0.0) {
      const double lambda = std::abs(out.min_eigenvalue);
      out.jitter_applied = lambda + 1e-10 * (1.0 + lambda);
      out.matrix.diagonal().array() += out.jitter_applied;
    }
  }
  return out;
}

namespace {

constexpr std::uint64_t kFieldStream = 0x6669656c64ULL;

// Lower factor L with L L^T = sigma; falls back to pivoted LDL^T for
// semidefinite input.
Eigen::MatrixXd
field_factor(const Eigen::MatrixXd& sigma)
{
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd l = llt.matrixL();
    if ((l.diagonal().array() > 0.0).all())
      return l;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  Eigen::VectorXd d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || d.minCoeff() < -1e-12 * scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
    throw NumericalError("covariance factorisation failed; smallest eigenvalue " +
                         std::to_string(eig.eigenvalues().minCoeff()));
  }
  d = d.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd l = ldlt.matrixL();
  l = l * d.asDiagonal();
  return ldlt.transpositionsP().transpose() * l;
}

} // namespace

Eigen::MatrixXd
sample_gaussian_field(const CovarianceMatrix& cov, std::size_t draws, std::uint64_t seed)
{
  const Eigen::Index k = cov.matrix.rows();
  const Eigen::MatrixXd l = field_factor(cov.matrix);
  Rng rng(seed, kFieldStream);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(draws), k);
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < k; ++c)
      z(r, c) = rng.normal();
  return z * l.transpose();
}

ConfidenceBand
confidence_band(const ProjectionCache& cache,
                const Point& observer,
                double alpha,
                const BandOptions& options)
{
  if (!(options.level >= 0.0 && options.level < 1.0))
    throw DomainError("band level must lie in [0, 1)");
  if (options.draws < 100)
    throw DomainError("band needs at least 100 field draws");

  ConfidenceBand band;
  band.surface = quantile_surface(cache, observer, alpha);
  band.level = options.level;
  band.draws = options.draws;
  band.seed = options.seed;
  band.studentized = options.studentized;

  const std::size_t k = cache.grid().size();
  const std::size_t n = cache.n();
  const double b =
    options.bandwidth > 0.0 ? options.bandwidth : default_bandwidth(n, alpha);
  band.h_hat.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    band.h_hat[j] = estimate_h(cache, j, alpha, b).h_hat;

  // P_n(H_i and H_j) by counting on the retained sample
  const std::size_t rank = quantile_rank(n, alpha);
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> bits(k * words, 0);
  const auto& data = cache.dataset();
  for (std::size_t j = 0; j < k; ++j) {
    const auto u = cache.grid()[j].span();
    const double c = cache.projections(j)[rank - 1];
    for (std::size_t i = 0; i < n; ++i)
      if (dot(data.row(i), u) <= c)
        bits[j * words + i / 64] |= std::uint64_t{ 1 } << (i % 64);
  }
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < k; ++a) {
    probs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = alpha;
    for (std::size_t c = a + 1; c < k; ++c) {
      std::size_t count = 0;
      for (std::size_t w = 0; w < words; ++w)
        count += static_cast<std::size_t>(std::popcount(bits[a * words + w] & bits[c * words + w]));
      const double p = static_cast<double>(count) / static_cast<double>(n);
      probs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = p;
      probs(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(a)) = p;
    }
  }
  std::vector<GridPoint> points;
  for (std::size_t j = 0; j < k; ++j)
    points.push_back({ j, alpha });
  const auto cov = build_covariance(points, probs, band.h_hat);
  band.jitter_applied = cov.jitter_applied;

  std::vector<double> sigma(k, 1.0);
  if (options.studentized)
    for (std::size_t j = 0; j < k; ++j)
      sigma[j] = std::sqrt(cov.matrix(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));

  double critical = 0.0;
  if (options.level > 0.0) {
    const Eigen::MatrixXd field = sample_gaussian_field(cov, options.draws, options.seed);
    std::vector<double> sup(options.draws);
    for (std::size_t r = 0; r < options.draws; ++r) {
      double m = 0.0;
      for (std::size_t j = 0; j < k; ++j)
        m = std::max(m, std::abs(field(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j))) / sigma[j]);
      sup[r] = m;
    }
    std::sort(sup.begin(), sup.end());
    critical = empirical_quantile(sup, options.level);
  }
  band.critical_value = critical;
  const double root_n = std::sqrt(static_cast<double>(n));
  band.halfwidth.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    band.halfwidth[j] = critical * sigma[j] / root_n;
  return band;
}

} // namespace qsurf
