#include "qsurf/replication.hpp"

#include "qsurf/error.hpp"
#include "qsurf/samples.hpp"

#include <algorithm>
#include <cmath>

namespace qsurf {

ReplicationPlan
ReplicationPlan::make(ModelSpec model, DirectionGrid grid, std::vector<double> alphas)
{
  if (!model.has_analytic_projection())
    throw CapabilityError(std::string(model.kind_name()) +
                          " has no analytic oracle for rate studies");
  if (grid.dims() != model.dims())
    throw DimensionError("grid and model dimensions differ");
  if (alphas.empty() || !std::is_sorted(alphas.begin(), alphas.end()))
    throw DomainError("level grid must be non-empty and ascending");
  const auto k = static_cast<Eigen::Index>(grid.size());
  const auto m = static_cast<Eigen::Index>(alphas.size());
  Eigen::MatrixXd offset(k, m), h(k, m);
  for (Eigen::Index j = 0; j < k; ++j) {
    const ProjectedLaw law(model, grid[static_cast<std::size_t>(j)]);
    for (Eigen::Index a = 0; a < m; ++a) {
      offset(j, a) = law.quantile(alphas[static_cast<std::size_t>(a)]);
      h(j, a) = law.pdf(offset(j, a));
    }
  }
  return { std::move(model), std::move(grid), std::move(alphas), std::move(offset), std::move(h) };
}

Eigen::MatrixXd
Replication::error(const ReplicationPlan& plan) const
{
  return empirical_offset - plan.true_offset;
}

Eigen::MatrixXd
Replication::empirical_process(const ReplicationPlan& plan) const
{
  const double nd = static_cast<double>(n);
  Eigen::MatrixXd e(count_le.rows(), count_le.cols());
  for (Eigen::Index j = 0; j < e.rows(); ++j)
    for (Eigen::Index a = 0; a < e.cols(); ++a)
      e(j, a) = std::sqrt(nd) * (count_le(j, a) / nd - plan.alphas[static_cast<std::size_t>(a)]);
  return e;
}

double
Replication::sup_error(const ReplicationPlan& plan) const
{
  return error(plan).cwiseAbs().maxCoeff();
}

double
Replication::bk_sup_residual(const ReplicationPlan& plan) const
{
  const double root_n = std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd residual =
    root_n * error(plan) + empirical_process(plan).cwiseQuotient(plan.true_h);
  return residual.cwiseAbs().maxCoeff();
}

std::uint64_t
replication_stream(std::size_t n, std::uint64_t rep)
{
  if (rep >= (std::uint64_t{ 1 } << 24))
    throw DomainError("replication index must be below 2^24");
  return (static_cast<std::uint64_t>(n) << 24) | rep;
}

namespace {

constexpr std::size_t kWindowedMinimum = 50000;

void
answer_from_sorted(std::span<double> values,
                   std::span<const std::size_t> ranks,
                   std::span<const double> thresholds,
                   std::span<double> stats_out,
                   std::span<std::size_t> counts_out)
{
  sort_values(values);
  for (std::size_t j = 0; j < ranks.size(); ++j)
    stats_out[j] = values[ranks[j] - 1];
  for (std::size_t j = 0; j < thresholds.size(); ++j)
    counts_out[j] = static_cast<std::size_t>(
      std::upper_bound(values.begin(), values.end(), thresholds[j]) - values.begin());
}

} // namespace

void
select_order_statistics(std::span<double> values,
                        std::span<const std::size_t> ranks,
                        std::span<const double> thresholds,
                        std::span<const double> halfwidths,
                        std::span<double> stats_out,
                        std::span<std::size_t> counts_out)
{
  const std::size_t n = values.size();
  const std::size_t m = ranks.size();
  if (thresholds.size() != m || halfwidths.size() != m || stats_out.size() != m ||
      counts_out.size() != m)
    throw DimensionError("selection inputs disagree in length");
  for (std::size_t r : ranks)
    if (r < 1 || r > n)
      throw DomainError("order statistic rank out of range");

  std::vector<double> bounds(2 * m);
  bool windowed = n >= kWindowedMinimum;
  for (std::size_t j = 0; j < m && windowed; ++j) {
    bounds[2 * j] = thresholds[j] - halfwidths[j];
    bounds[2 * j + 1] = thresholds[j] + halfwidths[j];
    if (!(halfwidths[j] > 0.0) || !std::isfinite(bounds[2 * j]) ||
        !std::isfinite(bounds[2 * j + 1]))
      windowed = false;
    if (j > 0 && (bounds[2 * j] < bounds[2 * j - 1] || ranks[j] < ranks[j - 1]))
      windowed = false;
  }
  if (!windowed) {
    answer_from_sorted(values, ranks, thresholds, stats_out, counts_out);
    return;
  }

  // bucket b = number of bounds <= v; odd buckets are windows [lo_j, hi_j)
  std::vector<std::size_t> hist(2 * m + 1, 0);
  std::vector<std::vector<double>> windows(m);
  const std::size_t nb = bounds.size();
  const double* bd = bounds.data();
  for (const double v : values) {
    std::size_t b = 0;
    for (std::size_t i = 0; i < nb; ++i)
      b += static_cast<std::size_t>(v >= bd[i]);
    ++hist[b];
    if (b & 1)
      windows[b >> 1].push_back(v);
  }
  std::size_t below = 0;
  for (std::size_t j = 0; j < m; ++j) {
    below += hist[2 * j];
    auto& w = windows[j];
    if (ranks[j] <= below || ranks[j] > below + w.size()) {
      answer_from_sorted(values, ranks, thresholds, stats_out, counts_out);
      return;
    }
    const auto pos = static_cast<std::ptrdiff_t>(ranks[j] - below - 1);
    std::nth_element(w.begin(), w.begin() + pos, w.end());
    stats_out[j] = w[static_cast<std::size_t>(pos)];
    counts_out[j] = below + static_cast<std::size_t>(std::count_if(
                              w.begin(), w.end(), [t = thresholds[j]](double v) { return v <= t; }));
    below += w.size();
  }
}

Replication
run_replication(const ReplicationPlan& plan,
                std::size_t n,
                std::uint64_t seed,
                std::uint64_t rep)
{
  const Dataset data = sample(plan.model, n, seed, replication_stream(n, rep));
  const auto k = plan.grid.size();
  const auto m = plan.alphas.size();
  Replication out;
  out.n = n;
  out.rep = rep;
  out.empirical_offset.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
  out.count_le.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));

  std::vector<std::size_t> ranks(m);
  for (std::size_t a = 0; a < m; ++a)
    ranks[a] = quantile_rank(n, plan.alphas[a]);
  std::vector<double> proj(n), thresholds(m), widths(m), stats(m);
  std::vector<std::size_t> counts(m);
  const double nd = static_cast<double>(n);
  for (std::size_t j = 0; j < k; ++j) {
    const auto u = plan.grid[j].span();
    for (std::size_t i = 0; i < n; ++i)
      proj[i] = dot(data.row(i), u);
    for (std::size_t a = 0; a < m; ++a) {
      const double alpha = plan.alphas[a];
      thresholds[a] = plan.true_offset(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a));
      // ten standard deviations of the order statistic
      widths[a] = 10.0 * std::sqrt(alpha * (1.0 - alpha) / nd) /
                  plan.true_h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a));
    }
    select_order_statistics(proj, ranks, thresholds, widths, stats, counts);
    for (std::size_t a = 0; a < m; ++a) {
      out.empirical_offset(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) = stats[a];
      out.count_le(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) =
        static_cast<double>(counts[a]);
    }
  }
  return out;
}

} // namespace qsurf
