#include "qsurf/verify.hpp"

#include "qsurf/error.hpp"
#include "qsurf/inference.hpp"
#include "qsurf/parallel.hpp"
#include "qsurf/replication.hpp"
#include "qsurf/samples.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <set>

namespace qsurf {

namespace {

constexpr double kRefineTolerance = 0.10;
constexpr double kDiagonalTolerance = 0.15;
constexpr double kOffDiagonalSe = 3.0;

std::string
fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

//! Linear interpolation between order statistics (the common "type 7" rule).
double
sample_quantile(std::vector<double> v, double p)
{
  if (v.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double
median(std::vector<double> v)
{
  return sample_quantile(std::move(v), 0.5);
}

class ReportBuilder
{
public:
  explicit ReportBuilder(const StudyConfig& cfg)
  {
    report_.config = cfg;
    report_.config_hash = cfg.hash();
  }

  void add(std::size_t n, long long rep, std::string stat, double value,
           double reference = kNoReference)
  {
    report_.rows.push_back({ std::string(to_string(report_.config.study)), n, rep,
                             std::move(stat), value, reference, report_.config.seed,
                             report_.config_hash });
  }

  void check(std::string name, bool passed, std::string detail)
  {
    report_.checks.push_back({ std::move(name), passed, std::move(detail) });
  }

  StudyReport finish()
  {
    for (const auto& c : report_.checks)
      add(0, -1, "check:" + c.name, c.passed ? 1.0 : 0.0);
    return std::move(report_);
  }

private:
  StudyReport report_;
};

DirectionGrid
study_grid(const StudyConfig& cfg, std::size_t factor = 1)
{
  const int d = cfg.model.dims();
  return DirectionGrid::make(d, cfg.resolved_directions() * (d == 1 ? 1 : factor),
                             default_scheme(d));
}

ReplicationPlan
rate_plan(const StudyConfig& cfg, std::size_t factor = 1)
{
  return ReplicationPlan::make(cfg.model, study_grid(cfg, factor),
                               cfg.delta.grid(cfg.alpha_steps));
}

std::vector<Replication>
replicate(const ReplicationPlan& plan, std::size_t n, const StudyConfig& cfg)
{
  std::vector<Replication> out(cfg.replications);
  parallel_for(
    cfg.replications,
    [&](std::size_t r) { out[r] = run_replication(plan, n, cfg.seed, r); },
    cfg.threads);
  return out;
}

void
require_rate_sizes(const StudyConfig& cfg)
{
  for (std::size_t n : cfg.n_grid)
    if (n < 3)
      throw ConfigurationError("rate studies need n >= 3 (log log n undefined)");
}

void
add_rate_table(ReportBuilder& out, const StudyConfig& cfg, const ReplicationPlan& plan)
{
  out.add(0, -1, "h_min", plan.true_h.minCoeff());
  out.add(0, -1, "h_max", plan.true_h.maxCoeff());
  for (std::size_t n : cfg.n_grid) {
    out.add(n, -1, "rate_lil", lil_rate(n));
    out.add(n, -1, "rate_bk", bahadur_kiefer_rate(n));
    out.add(n, -1, "rate_coupling", coupling_rate(n, cfg.model.dims()));
  }
}

QuantileSurface
surface_from_offsets(const ReplicationPlan& plan,
                     const Eigen::MatrixXd& offsets,
                     std::size_t level,
                     const Point& observer)
{
  QuantileSurface s;
  s.observer = observer;
  s.alpha = plan.alphas[level];
  s.scheme = plan.grid.scheme();
  s.entries.reserve(plan.grid.size());
  for (std::size_t j = 0; j < plan.grid.size(); ++j) {
    const Direction& u = plan.grid[j];
    const double y = offsets(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(level)) -
                     dot(as_span(observer), u.span());
    s.entries.push_back({ u, y, observer + y * u.vector() });
  }
  return s;
}

//! Ratio of the largest to the smallest entry; infinite if any is non-positive.
double
spread(const std::vector<double>& v)
{
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (!(*lo > 0.0))
    return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

} // namespace

std::string_view
to_string(StudyKind kind)
{
  switch (kind) {
    case StudyKind::consistency:
      return "consistency";
    case StudyKind::lil:
      return "lil";
    case StudyKind::clt:
      return "clt";
    case StudyKind::bk:
      return "bk";
    case StudyKind::psi:
      return "psi";
    case StudyKind::coverage:
      return "coverage";
  }
  return "consistency";
}

StudyKind
study_kind_from_string(std::string_view name)
{
  for (auto k : { StudyKind::consistency, StudyKind::lil, StudyKind::clt, StudyKind::bk,
                  StudyKind::psi, StudyKind::coverage })
    if (to_string(k) == name)
      return k;
  throw ConfigurationError("unknown study '" + std::string(name) + "'");
}

double
lil_rate(std::size_t n)
{
  if (n < 3)
    throw DomainError("log log n needs n >= 3");
  const double nd = static_cast<double>(n);
  return std::sqrt(std::log(std::log(nd)) / nd);
}

double
coupling_exponent_v(int dims)
{
  return 1.0 / (2.0 + 10.0 * dims);
}

double
coupling_exponent_w(int dims)
{
  return (4.0 + 10.0 * dims) / (4.0 + 20.0 * dims);
}

double
coupling_rate(std::size_t n, int dims)
{
  if (n < 2)
    throw DomainError("coupling rate needs n >= 2");
  const double nd = static_cast<double>(n);
  return std::pow(nd, -coupling_exponent_v(dims)) *
         std::pow(std::log(nd), coupling_exponent_w(dims));
}

bool
StudyReport::passed() const
{
  return std::all_of(checks.begin(), checks.end(), [](const StudyCheck& c) { return c.passed; });
}

std::vector<double>
StudyReport::values(std::string_view stat, std::size_t n) const
{
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.stat == stat && r.n == n)
      out.push_back(r.value);
  return out;
}

StudyReport
run_consistency_study(const StudyConfig& cfg)
{
  cfg.validate();
  require_rate_sizes(cfg);
  const ReplicationPlan plan = rate_plan(cfg);
  const Point observer = cfg.resolved_observer();
  const std::size_t m = plan.alphas.size();
  const std::vector<std::size_t> watched{ 0, m / 2, m - 1 };
  std::vector<QuantileSurface> truth;
  for (std::size_t a : watched)
    truth.push_back(surface_from_offsets(plan, plan.true_offset, a, observer));

  std::unique_ptr<ReplicationPlan> refined;
  if (cfg.refine_check)
    refined = std::make_unique<ReplicationPlan>(rate_plan(cfg, 2));

  ReportBuilder out(cfg);
  add_rate_table(out, cfg, plan);
  std::vector<double> medians;
  for (std::size_t n : cfg.n_grid) {
    const auto reps = replicate(plan, n, cfg);
    const double rate = lil_rate(n);
    std::vector<double> sup(reps.size());
    std::vector<std::vector<double>> haus(watched.size(), std::vector<double>(reps.size()));
    for (std::size_t r = 0; r < reps.size(); ++r) {
      sup[r] = reps[r].sup_error(plan);
      out.add(n, static_cast<long long>(r), "sup_error", sup[r], rate);
      for (std::size_t w = 0; w < watched.size(); ++w) {
        haus[w][r] = hausdorff_distance(
          surface_from_offsets(plan, reps[r].empirical_offset, watched[w], observer), truth[w]);
        out.add(n, static_cast<long long>(r),
                "hausdorff[alpha=" + fmt(plan.alphas[watched[w]]) + "]", haus[w][r], rate);
      }
    }
    medians.push_back(median(sup));
    out.add(n, -1, "median_sup_error", medians.back(), rate);
    for (std::size_t w = 0; w < watched.size(); ++w)
      out.add(n, -1, "median_hausdorff[alpha=" + fmt(plan.alphas[watched[w]]) + "]",
              median(haus[w]), rate);

    if (refined) {
      const auto fine = replicate(*refined, n, cfg);
      std::vector<double> fine_sup(fine.size());
      for (std::size_t r = 0; r < fine.size(); ++r) {
        fine_sup[r] = fine[r].sup_error(*refined);
        out.add(n, static_cast<long long>(r), "sup_error_refined", fine_sup[r], rate);
      }
      const double change = std::abs(median(fine_sup) - medians.back()) / medians.back();
      out.add(n, -1, "grid_refinement_change", change, kRefineTolerance);
      out.check("grid_refinement_stable[n=" + std::to_string(n) + "]",
                change < kRefineTolerance,
                "relative change of median sup error " + fmt(change));
    }
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < medians.size(); ++i)
    decreasing = decreasing && medians[i] <= medians[i - 1];
  out.check("median_sup_error_non_increasing", decreasing, "medians across n_grid");
  return out.finish();
}

StudyReport
run_lil_study(const StudyConfig& cfg)
{
  cfg.validate();
  require_rate_sizes(cfg);
  const ReplicationPlan plan = rate_plan(cfg);
  ReportBuilder out(cfg);
  add_rate_table(out, cfg, plan);
  std::vector<double> upper;
  bool finite = true;
  for (std::size_t n : cfg.n_grid) {
    const auto reps = replicate(plan, n, cfg);
    const double rate = lil_rate(n);
    std::vector<double> ratio(reps.size());
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const double sup = reps[r].sup_error(plan);
      ratio[r] = sup / rate;
      finite = finite && std::isfinite(ratio[r]) && ratio[r] > 0.0;
      out.add(n, static_cast<long long>(r), "sup_error", sup, rate);
      out.add(n, static_cast<long long>(r), "lil_ratio", ratio[r]);
    }
    upper.push_back(sample_quantile(ratio, 0.75));
    out.add(n, -1, "median_lil_ratio", median(ratio));
    out.add(n, -1, "upper_quartile_lil_ratio", upper.back());
  }
  const double slack = cfg.resolved_slack();
  const double s = spread(upper);
  out.check("lil_ratio_positive_finite", finite, "every replication");
  out.check("lil_envelope", s < slack,
            "max/min upper quartile " + fmt(s) + " against slack " + fmt(slack));
  return out.finish();
}

StudyReport
run_bk_study(const StudyConfig& cfg)
{
  cfg.validate();
  require_rate_sizes(cfg);
  const ReplicationPlan plan = rate_plan(cfg);
  ReportBuilder out(cfg);
  add_rate_table(out, cfg, plan);
  std::vector<double> medians;
  for (std::size_t n : cfg.n_grid) {
    const auto reps = replicate(plan, n, cfg);
    const double b_n = bahadur_kiefer_rate(n);
    std::vector<double> ratio(reps.size());
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const double res = reps[r].bk_sup_residual(plan);
      ratio[r] = res / b_n;
      out.add(n, static_cast<long long>(r), "bk_sup_residual", res, b_n);
      out.add(n, static_cast<long long>(r), "bk_ratio", ratio[r]);
    }
    medians.push_back(median(ratio));
    out.add(n, -1, "median_bk_ratio", medians.back());
    const double gamma = lil_rate(n);
    if (gamma < kRhoGammaMax) {
      const double rho = rho_gamma(cfg.model, gamma, plan.grid, cfg.delta, cfg.alpha_steps);
      out.add(n, -1, "oracle_a_n", std::sqrt(static_cast<double>(n)) * rho, b_n);
    }
  }
  const double slack = cfg.resolved_slack();
  bool ok = true;
  std::string detail;
  for (std::size_t i = 1; i < medians.size(); ++i) {
    const double step = medians[i] / medians[i - 1];
    ok = ok && step <= slack;
    detail += (i > 1 ? " " : "") + fmt(step);
  }
  out.check("bk_envelope", ok, "successive median ratios [" + detail + "] against slack " +
                                 fmt(slack));
  return out.finish();
}

StudyReport
run_clt_study(const StudyConfig& cfg)
{
  cfg.validate();
  if (cfg.replications < 500)
    throw ConfigurationError("clt study needs at least 500 replications");
  const DirectionGrid grid = study_grid(cfg);
  const auto points = cfg.resolved_points();
  for (const auto& p : points)
    if (p.direction >= grid.size())
      throw ConfigurationError("clt point direction index out of range");

  std::vector<std::size_t> dir_ids;
  std::vector<double> alphas;
  for (const auto& p : points) {
    dir_ids.push_back(p.direction);
    alphas.push_back(p.alpha);
  }
  std::sort(dir_ids.begin(), dir_ids.end());
  dir_ids.erase(std::unique(dir_ids.begin(), dir_ids.end()), dir_ids.end());
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  std::vector<Direction> dirs;
  for (std::size_t j : dir_ids)
    dirs.push_back(grid[j]);
  const ReplicationPlan plan =
    ReplicationPlan::make(cfg.model, DirectionGrid::from_list(dirs), alphas);

  const std::size_t p = points.size();
  std::vector<Eigen::Index> row(p), col(p);
  for (std::size_t i = 0; i < p; ++i) {
    row[i] = std::lower_bound(dir_ids.begin(), dir_ids.end(), points[i].direction) - dir_ids.begin();
    col[i] = std::lower_bound(alphas.begin(), alphas.end(), points[i].alpha) - alphas.begin();
  }

  // oracle covariance: true h and Monte Carlo intersection probabilities only
  std::vector<HalfSpace> hs;
  std::vector<GridPoint> gp;
  std::vector<double> h(p);
  for (std::size_t i = 0; i < p; ++i) {
    hs.push_back({ grid[points[i].direction], plan.true_offset(row[i], col[i]) });
    gp.push_back({ points[i].direction, points[i].alpha });
    h[i] = plan.true_h(row[i], col[i]);
  }
  const Eigen::MatrixXd probs = intersection_probs(cfg.model, hs, cfg.mc_n, cfg.seed);
  const CovarianceMatrix sigma = build_covariance(gp, probs, h);

  ReportBuilder out(cfg);
  for (std::size_t i = 0; i < p; ++i) {
    out.add(0, -1, "point_direction[" + std::to_string(i) + "]",
            static_cast<double>(points[i].direction));
    out.add(0, -1, "point_alpha[" + std::to_string(i) + "]", points[i].alpha);
    out.add(0, -1, "true_h[" + std::to_string(i) + "]", h[i]);
  }
  out.add(0, -1, "oracle_jitter", sigma.jitter_applied);

  const double mc = static_cast<double>(cfg.mc_n);
  for (std::size_t n : cfg.n_grid) {
    const auto reps = replicate(plan, n, cfg);
    const double root_n = std::sqrt(static_cast<double>(n));
    const auto R = static_cast<Eigen::Index>(reps.size());
    Eigen::MatrixXd x(R, static_cast<Eigen::Index>(p));
    for (Eigen::Index r = 0; r < R; ++r) {
      const Eigen::MatrixXd err = reps[static_cast<std::size_t>(r)].error(plan);
      for (std::size_t i = 0; i < p; ++i) {
        x(r, static_cast<Eigen::Index>(i)) = root_n * err(row[i], col[i]);
        out.add(n, r, "scaled_error[" + std::to_string(i) + "]",
                x(r, static_cast<Eigen::Index>(i)));
      }
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centred = x.rowwise() - mean;
    const double Rd = static_cast<double>(R);
    const Eigen::MatrixXd cov = centred.transpose() * centred / (Rd - 1.0);

    for (std::size_t i = 0; i < p; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Eigen::VectorXd c = centred.col(ii);
      const double sd = std::sqrt(c.squaredNorm() / Rd);
      const double skew = c.array().cube().mean() / std::pow(sd, 3);
      const double kurt = c.array().square().square().mean() / std::pow(sd, 4) - 3.0;
      out.add(n, -1, "mean[" + std::to_string(i) + "]", mean(ii), 0.0);
      out.add(n, -1, "skewness[" + std::to_string(i) + "]", skew, 0.0);
      out.add(n, -1, "excess_kurtosis[" + std::to_string(i) + "]", kurt, 0.0);
    }
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i; j < p; ++j) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        const std::string tag = "[" + std::to_string(i) + ":" + std::to_string(j) + "]";
        const double ref = sigma.matrix(ii, jj);
        const Eigen::ArrayXd prod = centred.col(ii).array() * centred.col(jj).array();
        const double emp_se = std::sqrt((prod - prod.mean()).square().sum() / (Rd - 1.0) / Rd);
        const double pij = std::clamp(probs(ii, jj), 0.0, 1.0);
        const double oracle_se = i == j ? 0.0 : std::sqrt(pij * (1.0 - pij) / mc) / (h[i] * h[j]);
        const double se = std::hypot(emp_se, oracle_se);
        out.add(n, -1, "cov" + tag, cov(ii, jj), ref);
        out.add(n, -1, "cov_se" + tag, se);
        if (i == j) {
          const double rel = std::abs(cov(ii, jj) - ref) / ref;
          out.check("cov_diag" + tag + "[n=" + std::to_string(n) + "]", rel <= kDiagonalTolerance,
                    "relative error " + fmt(rel));
        } else {
          const double z = std::abs(cov(ii, jj) - ref) / se;
          out.check("cov_off" + tag + "[n=" + std::to_string(n) + "]", z <= kOffDiagonalSe,
                    fmt(z) + " standard errors");
        }
      }
    }
  }
  return out.finish();
}

StudyReport
run_coverage_study(const StudyConfig& cfg)
{
  cfg.validate();
  if (!cfg.model.has_analytic_projection())
    throw CapabilityError(std::string(cfg.model.kind_name()) + " has no analytic oracle");
  const DirectionGrid grid = study_grid(cfg);
  const Point observer = cfg.resolved_observer();
  std::vector<double> truth(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    truth[j] = true_directional_quantile(cfg.model, observer, grid[j], cfg.alpha);

  ReportBuilder out(cfg);
  for (std::size_t n : cfg.n_grid) {
    struct Outcome
    {
      bool covered;
      double worst;
      double jitter;
    };
    std::vector<Outcome> res(cfg.replications);
    parallel_for(
      cfg.replications,
      [&](std::size_t r) {
        const std::uint64_t stream = replication_stream(n, r);
        auto data = std::make_shared<const Dataset>(sample(cfg.model, n, cfg.seed, stream));
        const ProjectionCache cache(data, grid, CacheOptions{ .threads = 1 });
        BandOptions opt;
        opt.level = cfg.level;
        opt.draws = cfg.draws;
        opt.seed = cfg.seed ^ (stream * 0x9E3779B97F4A7C15ULL);
        opt.bandwidth = cfg.bandwidth;
        opt.studentized = cfg.studentized;
        const ConfidenceBand band = confidence_band(cache, observer, cfg.alpha, opt);
        double worst = 0.0;
        bool covered = true;
        for (std::size_t j = 0; j < grid.size(); ++j) {
          const double err = std::abs(band.surface.entries[j].y - truth[j]);
          covered = covered && err <= band.halfwidth[j];
          worst = std::max(worst, band.halfwidth[j] > 0.0
                                    ? err / band.halfwidth[j]
                                    : std::numeric_limits<double>::infinity());
        }
        res[r] = { covered, worst, band.jitter_applied };
      },
      cfg.threads);
    double hits = 0.0;
    for (std::size_t r = 0; r < res.size(); ++r) {
      hits += res[r].covered ? 1.0 : 0.0;
      out.add(n, static_cast<long long>(r), "covered", res[r].covered ? 1.0 : 0.0);
      out.add(n, static_cast<long long>(r), "max_normalized_error", res[r].worst, 1.0);
      out.add(n, static_cast<long long>(r), "jitter", res[r].jitter);
    }
    const double R = static_cast<double>(res.size());
    const double coverage = hits / R;
    out.add(n, -1, "coverage", coverage, cfg.level);
    out.add(n, -1, "coverage_mc_se", std::sqrt(coverage * (1.0 - coverage) / R));
    out.check("coverage_in_range[n=" + std::to_string(n) + "]",
              coverage >= cfg.coverage_min && coverage <= cfg.coverage_max,
              "coverage " + fmt(coverage) + " against [" + fmt(cfg.coverage_min) + ", " +
                fmt(cfg.coverage_max) + "]");
  }
  return out.finish();
}

StudyReport
run_psi_study(const StudyConfig& cfg)
{
  cfg.validate();
  const DirectionGrid grid = study_grid(cfg);
  const Point observer = cfg.resolved_observer();
  const double slack = cfg.resolved_slack();
  ReportBuilder out(cfg);
  for (std::size_t n : cfg.n_grid) {
    const std::size_t E = cfg.eps.size();
    std::vector<std::vector<double>> psi(cfg.replications, std::vector<double>(E));
    parallel_for(
      cfg.replications,
      [&](std::size_t r) {
        auto data = std::make_shared<const Dataset>(
          sample(cfg.model, n, cfg.seed, replication_stream(n, r)));
        const ProjectionCache cache(data, grid, CacheOptions{ .threads = 1 });
        for (std::size_t e = 0; e < E; ++e) {
          try {
            psi[r][e] = psi_hat(cache, observer, cfg.eps[e], cfg.delta);
          } catch (const NoAdmissibleBand&) {
            psi[r][e] = std::numeric_limits<double>::quiet_NaN();
          }
        }
      },
      cfg.threads);
    std::vector<double> med(E);
    bool admissible = true;
    for (std::size_t e = 0; e < E; ++e) {
      const std::string tag = "[eps=" + fmt(cfg.eps[e]) + "]";
      std::vector<double> ratio;
      bool eps_ok = true;
      for (std::size_t r = 0; r < cfg.replications; ++r) {
        out.add(n, static_cast<long long>(r), "psi_hat" + tag, psi[r][e], cfg.eps[e]);
        out.add(n, static_cast<long long>(r), "psi_ratio" + tag, psi[r][e] / cfg.eps[e]);
        eps_ok = eps_ok && !std::isnan(psi[r][e]);
        ratio.push_back(psi[r][e] / cfg.eps[e]);
      }
      admissible = admissible && eps_ok;
      med[e] = eps_ok ? median(ratio) : std::numeric_limits<double>::quiet_NaN();
      out.add(n, -1, "median_psi_ratio" + tag, med[e], cfg.eps[e]);
    }
    const double s = admissible ? spread(med) : std::numeric_limits<double>::infinity();
    out.check("psi_admissible[n=" + std::to_string(n) + "]", admissible,
              "every eps admits a band");
    out.check("psi_ratio_stable[n=" + std::to_string(n) + "]", s < slack,
              "max/min median ratio " + fmt(s) + " against slack " + fmt(slack));
  }
  return out.finish();
}

StudyReport
run_study(const StudyConfig& cfg)
{
  switch (cfg.study) {
    case StudyKind::consistency:
      return run_consistency_study(cfg);
    case StudyKind::lil:
      return run_lil_study(cfg);
    case StudyKind::clt:
      return run_clt_study(cfg);
    case StudyKind::bk:
      return run_bk_study(cfg);
    case StudyKind::psi:
      return run_psi_study(cfg);
    case StudyKind::coverage:
      return run_coverage_study(cfg);
  }
  throw ConfigurationError("unknown study");
}

} // namespace qsurf
