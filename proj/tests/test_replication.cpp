#include "qsurf/error.hpp"
#include "qsurf/inference.hpp"
#include "qsurf/replication.hpp"
#include "qsurf/samples.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace qsurf;
using qsurf::test::pt;

TEST(SelectOrderStatistics, MatchesFullSort)
{
  Rng rng(1);
  for (std::size_t n : { 10u, 1000u, 60000u, 200000u }) {
    std::vector<double> v(n);
    for (auto& x : v)
      x = rng.normal();
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::vector<std::size_t> ranks{ quantile_rank(n, 0.6), quantile_rank(n, 0.75), quantile_rank(n, 0.9) };
    const std::vector<double> thresholds{ 0.2533, 0.6745, 1.2816 };
    for (double width : { 1e-4, 0.05, 10.0 }) {
      auto work = v;
      std::vector<double> hw(3, width), stats(3);
      std::vector<std::size_t> counts(3);
      select_order_statistics(work, ranks, thresholds, hw, stats, counts);
      for (std::size_t j = 0; j < 3; ++j) {
        ASSERT_EQ(stats[j], sorted[ranks[j] - 1]) << n << " " << width;
        ASSERT_EQ(counts[j], static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), thresholds[j]) - sorted.begin()));
      }
    }
  }
}

TEST(SelectOrderStatistics, Validation)
{
  std::vector<double> v{ 3, 1, 2 };
  std::vector<std::size_t> ranks{ 4 }, counts(1);
  std::vector<double> t{ 0 }, w{ 1 }, s(1);
  EXPECT_THROW(select_order_statistics(v, ranks, t, w, s, counts), DomainError);
  std::vector<double> t2{ 0, 1 };
  ranks = { 1 };
  EXPECT_THROW(select_order_statistics(v, ranks, t2, w, s, counts), DimensionError);
}

TEST(ReplicationStream, DistinctAndBounded)
{
  EXPECT_NE(replication_stream(1000, 1), replication_stream(1000, 2));
  EXPECT_NE(replication_stream(1000, 0), replication_stream(10000, 0));
  EXPECT_THROW(replication_stream(10, std::uint64_t{ 1 } << 24), DomainError);
}

TEST(ReplicationPlan, RequiresAnalyticModel)
{
  const auto grid = DirectionGrid::make(2, 8, GridScheme::uniform_angle_2d);
  EXPECT_THROW(ReplicationPlan::make(ModelSpec::uniform_spiral(2, 0), grid, { 0.7 }), CapabilityError);
  EXPECT_THROW(ReplicationPlan::make(ModelSpec::standard_gaussian(3), grid, { 0.7 }), DimensionError);
  EXPECT_THROW(ReplicationPlan::make(ModelSpec::standard_gaussian(2), grid, { 0.8, 0.7 }), DomainError);
}

class EngineCrossCheck : public ::testing::TestWithParam<std::size_t>
{};

// The windowed engine must agree exactly with the projection cache built
// from the same seeded sample.
TEST_P(EngineCrossCheck, MatchesCacheComputation)
{
  const std::size_t n = GetParam();
  const auto model = ModelSpec::mixture(
    { { pt({ -2, 0 }), Eigen::MatrixXd::Identity(2, 2) }, { pt({ 2, 0 }), 3.0 * Eigen::MatrixXd::Identity(2, 2) } },
    { 0.25, 0.75 });
  const auto grid = DirectionGrid::make(2, 40, GridScheme::uniform_angle_2d);
  const auto alphas = DeltaRange{}.grid(9);
  const auto plan = ReplicationPlan::make(model, grid, alphas);
  const std::uint64_t seed = 17, rep = 3;
  const auto r = run_replication(plan, n, seed, rep);

  const auto cache = build_projection_cache(sample(model, n, seed, replication_stream(n, rep)), grid);
  for (std::size_t j = 0; j < grid.size(); ++j)
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const auto jj = static_cast<Eigen::Index>(j), aa = static_cast<Eigen::Index>(a);
      ASSERT_EQ(r.empirical_offset(jj, aa), empirical_quantile(cache, j, alphas[a]));
      ASSERT_EQ(r.empirical_process(plan)(jj, aa), empirical_process_at_quantile(cache, model, j, alphas[a]));
      ASSERT_EQ(r.error(plan)(jj, aa),
                directional_quantile(cache, pt({ 0, 0 }), j, alphas[a]) -
                  true_directional_quantile(model, pt({ 0, 0 }), grid[j], alphas[a]));
    }
  const auto bk = bk_residual(cache, model, DeltaRange{}, 9);
  EXPECT_EQ(r.bk_sup_residual(plan), bk.sup_residual);
}

INSTANTIATE_TEST_SUITE_P(SampleSizes, EngineCrossCheck, ::testing::Values(500, 100000));

TEST(Replication, DeterministicPerSeedAndRep)
{
  const auto plan = ReplicationPlan::make(ModelSpec::standard_gaussian(2),
                                          DirectionGrid::make(2, 16, GridScheme::uniform_angle_2d),
                                          DeltaRange{}.grid(3));
  const auto a = run_replication(plan, 2000, 1, 0);
  EXPECT_EQ(a.empirical_offset, run_replication(plan, 2000, 1, 0).empirical_offset);
  EXPECT_NE(a.empirical_offset, run_replication(plan, 2000, 1, 1).empirical_offset);
  EXPECT_NE(a.empirical_offset, run_replication(plan, 2000, 2, 0).empirical_offset);
  EXPECT_GT(a.sup_error(plan), 0.0);
}
