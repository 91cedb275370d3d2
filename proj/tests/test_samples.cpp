#include "qsurf/error.hpp"
#include "qsurf/rng.hpp"
#include "qsurf/samples.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qsurf;
using qsurf::test::from_rows;
using qsurf::test::naive_rank;
using qsurf::test::pt;

TEST(ParseDataset, PlainCsv)
{
  const auto d = parse_dataset("0,0\n1,1", DataFormat::csv);
  EXPECT_EQ(d.n(), 2u);
  EXPECT_EQ(d.dims(), 2);
  EXPECT_EQ(d.points()(1, 0), 1.0);
}

TEST(ParseDataset, HeaderIsSkipped)
{
  const auto d = parse_dataset("x,y\n0,0\n", DataFormat::csv);
  EXPECT_EQ(d.n(), 1u);
  EXPECT_EQ(d.dims(), 2);
}

TEST(ParseDataset, RaggedCsvNamesTheLine)
{
  try {
    parse_dataset("0,0\n1,1\n2\n", DataFormat::csv);
    FAIL() << "ragged rows accepted";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseDataset, RaggedJsonlNamesTheLine)
{
  try {
    parse_dataset("[0,0]\n[1,1,1]\n", DataFormat::jsonl);
    FAIL() << "ragged rows accepted";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(ParseDataset, RejectsNonFiniteAndEmpty)
{
  EXPECT_THROW(parse_dataset("0,nan\n", DataFormat::csv), ParseError);
  EXPECT_THROW(parse_dataset("0,inf\n", DataFormat::csv), ParseError);
  EXPECT_THROW(parse_dataset("", DataFormat::csv), ParseError);
  EXPECT_THROW(parse_dataset("x,y\n", DataFormat::csv), ParseError);
  EXPECT_THROW(parse_dataset("0,1\n1,abc\n", DataFormat::csv), ParseError);
}

TEST(ParseDataset, Jsonl)
{
  const auto d = parse_dataset("[0.5, -1]\n\n[2, 3]\n", DataFormat::jsonl);
  EXPECT_EQ(d.n(), 2u);
  EXPECT_EQ(d.points()(0, 1), -1.0);
}

TEST(DataFormat, FromPathAndName)
{
  EXPECT_EQ(data_format_for_path("a/b.jsonl"), DataFormat::jsonl);
  EXPECT_EQ(data_format_for_path("a/b.ndjson"), DataFormat::jsonl);
  EXPECT_EQ(data_format_for_path("a/b.csv"), DataFormat::csv);
  EXPECT_EQ(data_format_from_string("jsonl"), DataFormat::jsonl);
  EXPECT_THROW(data_format_from_string("xml"), ConfigurationError);
}

TEST(WriteCsv, RoundTripIsExact)
{
  const auto d = qsurf::test::uniform_cloud(500, 3, 11, 1e3);
  std::ostringstream out;
  write_csv(d, out);
  const auto back = parse_dataset(out.str(), DataFormat::csv);
  EXPECT_EQ(back.points(), d.points());
}

TEST(LoadDataset, FileAndMissingFile)
{
  const auto dir = std::filesystem::temp_directory_path() / "qsurf_samples_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "pts.csv";
  std::ofstream(path) << "a,b\n1,2\n3,4\n";
  const auto d = load_dataset(path);
  EXPECT_EQ(d.n(), 2u);
  EXPECT_THROW(load_dataset(dir / "missing.csv"), Error);
}

TEST(SortValues, MatchesStdSort)
{
  for (std::size_t n : { 0u, 1u, 17u, 4095u, 4096u, 100000u }) {
    Rng rng(n + 1);
    std::vector<double> v(n);
    for (auto& x : v) {
      const double r = rng.uniform();
      x = r < 0.1 ? 0.0 : (r < 0.2 ? -0.0 : rng.normal() * std::pow(10.0, rng.uniform(-5, 5)));
    }
    auto expected = v;
    std::stable_sort(expected.begin(), expected.end());
    sort_values(v);
    ASSERT_TRUE(std::is_sorted(v.begin(), v.end()));
    for (std::size_t i = 0; i < n; ++i)
      ASSERT_EQ(v[i], expected[i]);
  }
}

TEST(QuantileRank, MatchesLinearScan)
{
  for (std::size_t n = 1; n <= 300; ++n) {
    for (int a = 1; a <= 200; ++a) {
      const double alpha = a / 200.0;
      ASSERT_EQ(quantile_rank(n, alpha), naive_rank(n, alpha)) << n << " " << alpha;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      const double alpha = static_cast<double>(i) / static_cast<double>(n);
      ASSERT_EQ(quantile_rank(n, alpha), naive_rank(n, alpha));
    }
  }
  EXPECT_THROW(quantile_rank(10, 0.0), DomainError);
  EXPECT_THROW(quantile_rank(10, 1.0001), DomainError);
  EXPECT_EQ(quantile_rank(10, 1.0), 10u);
}

TEST(EmpiricalQuantile, TwoPointExamples)
{
  const std::vector<double> p{ 0.0, 2.0 };
  EXPECT_EQ(empirical_quantile(p, 0.5), 0.0);
  EXPECT_EQ(empirical_quantile(p, 0.51), 2.0);
  EXPECT_EQ(empirical_cdf(p, 1.0), 0.5);
  EXPECT_EQ(empirical_cdf(p, 2.0), 1.0);
  EXPECT_EQ(empirical_cdf(p, -1.0), 0.0);
  EXPECT_THROW(empirical_quantile(p, 0.0), DomainError);
}

TEST(EmpiricalQuantile, InfDefinitionProperties)
{
  Rng rng(3);
  std::vector<double> v(257);
  for (auto& x : v)
    x = std::round(rng.normal() * 4.0) / 4.0; // plenty of ties
  std::sort(v.begin(), v.end());
  double prev = -std::numeric_limits<double>::infinity();
  for (int a = 1; a <= 1000; ++a) {
    const double alpha = a / 1000.0;
    const double q = empirical_quantile(v, alpha);
    EXPECT_GE(empirical_cdf(v, q), alpha);
    EXPECT_LT(empirical_cdf(v, std::nextafter(q, -1e300)), alpha);
    EXPECT_GE(q, prev);
    prev = q;
  }
}

TEST(ProjectionCache, TwoPointExample)
{
  const auto grid = DirectionGrid::make(2, 4, GridScheme::uniform_angle_2d);
  const auto cache = build_projection_cache(from_rows({ { 0, 0 }, { 2, 0 } }), grid);
  const auto x = cache.projections(0);
  EXPECT_EQ(x[0], 0.0);
  EXPECT_EQ(x[1], 2.0);
  const auto y = cache.projections(1); // u = (cos 90, sin 90)
  EXPECT_NEAR(y[0], 0.0, 1e-15);
  EXPECT_NEAR(y[1], 0.0, 1e-15);
  EXPECT_THROW(cache.projections(4), DomainError);
}

class CacheOracle : public ::testing::TestWithParam<std::size_t>
{};

TEST_P(CacheOracle, EqualsNaiveSortedProjections)
{
  const std::size_t k = GetParam();
  const auto data = qsurf::test::uniform_cloud(5000, 2, 21);
  const auto grid = DirectionGrid::make(2, k, GridScheme::uniform_angle_2d);
  const auto cache = build_projection_cache(data, grid);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> naive(data.n());
    for (std::size_t i = 0; i < data.n(); ++i)
      naive[i] = data.points()(static_cast<Eigen::Index>(i), 0) * grid[j][0] +
                 data.points()(static_cast<Eigen::Index>(i), 1) * grid[j][1];
    std::sort(naive.begin(), naive.end());
    const auto p = cache.projections(j);
    ASSERT_EQ(p.size(), naive.size());
    for (std::size_t i = 0; i < naive.size(); ++i)
      ASSERT_EQ(p[i], naive[i]) << "direction " << j << " rank " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(GridSizes, CacheOracle, ::testing::Values(8, 9, 360));

TEST(ProjectionCache, AntipodalArraysAreReversedNegations)
{
  const auto data = qsurf::test::uniform_cloud(10000, 2, 22);
  const auto grid = DirectionGrid::make(2, 64, GridScheme::uniform_angle_2d);
  const auto cache = build_projection_cache(data, grid);
  for (std::size_t j = 0; j < 64; ++j) {
    const auto a = cache.projections(j);
    const auto b = cache.projections(grid.antipode(j));
    for (std::size_t i = 0; i < a.size(); ++i)
      ASSERT_EQ(a[i], -b[a.size() - 1 - i]);
  }
}

TEST(ProjectionCache, NormalSampleMatchesNaiveAtRandomQueries)
{
  Rng rng(9);
  RowMatrix m(1000, 3);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (int j = 0; j < 3; ++j)
      m(i, j) = rng.normal();
  const Dataset data(m);
  const auto grid = DirectionGrid::make(3, 50, GridScheme::fibonacci_sphere_3d);
  const auto cache = build_projection_cache(data, grid);
  for (int t = 0; t < 10000; ++t) {
    const auto j = static_cast<std::size_t>(rng.below(50));
    const double c = rng.normal();
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.n(); ++i)
      count += dot(data.row(i), grid[j].span()) <= c;
    ASSERT_EQ(empirical_cdf(cache, j, c), static_cast<double>(count) / 1000.0);
  }
  for (int t = 0; t < 1000; ++t) {
    const auto j = static_cast<std::size_t>(rng.below(50));
    const double alpha = rng.uniform_open();
    ASSERT_EQ(empirical_quantile(cache, j, alpha),
              qsurf::test::naive_quantile(data, grid[j].vector(), alpha));
  }
}

TEST(ProjectionCache, ThreadCountDoesNotChangeResults)
{
  const auto data = std::make_shared<const Dataset>(qsurf::test::uniform_cloud(20000, 2, 23));
  const auto grid = DirectionGrid::make(2, 31, GridScheme::uniform_angle_2d);
  const ProjectionCache one(data, grid, CacheOptions{ .threads = 1 });
  const ProjectionCache four(data, grid, CacheOptions{ .threads = 4 });
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto a = one.projections(j), b = four.projections(j);
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(ProjectionCache, MemoryCapAndDimensionChecks)
{
  const auto data = qsurf::test::uniform_cloud(1000, 2, 24);
  const auto grid = DirectionGrid::make(2, 100, GridScheme::uniform_angle_2d);
  EXPECT_THROW(build_projection_cache(data, grid, CacheOptions{ .max_bytes = 1000 }),
               ConfigurationError);
  const auto grid3 = DirectionGrid::make(3, 10, GridScheme::fibonacci_sphere_3d);
  EXPECT_THROW(build_projection_cache(data, grid3), DimensionError);
}

TEST(Dataset, Validation)
{
  EXPECT_THROW(Dataset(RowMatrix(0, 2)), DomainError);
  RowMatrix bad(1, 2);
  bad << 1.0, std::numeric_limits<double>::infinity();
  EXPECT_THROW(Dataset(std::move(bad)), DomainError);
}
