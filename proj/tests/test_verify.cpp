#include "qsurf/error.hpp"
#include "qsurf/inference.hpp"
#include "qsurf/samples.hpp"
#include "qsurf/serialize.hpp"
#include "qsurf/verify.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace qsurf;

namespace {

StudyConfig
small(StudyKind kind)
{
  StudyConfig c;
  c.study = kind;
  c.n_grid = { 1000, 10000 };
  c.replications = 20;
  c.directions = 40;
  c.threads = 1;
  return c;
}

double
only(const StudyReport& r, std::string_view stat, std::size_t n)
{
  const auto v = r.values(stat, n);
  EXPECT_EQ(v.size(), 1u) << stat;
  return v.empty() ? std::nan("") : v[0];
}

const StudyCheck*
find_check(const StudyReport& r, std::string_view name)
{
  for (const auto& c : r.checks)
    if (c.name == name)
      return &c;
  return nullptr;
}

} // namespace

TEST(Rates, Formulas)
{
  EXPECT_NEAR(lil_rate(1000), std::sqrt(std::log(std::log(1000.0)) / 1000.0), 1e-16);
  EXPECT_THROW(lil_rate(2), DomainError);
  EXPECT_DOUBLE_EQ(coupling_exponent_v(2), 1.0 / 22.0);
  EXPECT_DOUBLE_EQ(coupling_exponent_w(2), 24.0 / 44.0);
  EXPECT_NEAR(coupling_rate(10000, 1), std::pow(1e4, -1.0 / 12.0) * std::pow(std::log(1e4), 14.0 / 24.0), 1e-14);
}

TEST(StudyConfig, JsonDefaultsAndHash)
{
  const auto c = StudyConfig::from_json(nlohmann::json::parse(R"({"study":"lil","seed":5})"));
  EXPECT_EQ(c.study, StudyKind::lil);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.resolved_slack(), 1.5);
  EXPECT_EQ(c.resolved_directions(), 200u);
  EXPECT_EQ(c.hash().size(), 16u);
  EXPECT_EQ(c.hash(), StudyConfig::from_json(c.to_json()).hash());
  auto d = c;
  d.threads = 7;
  EXPECT_EQ(d.hash(), c.hash());
  d.seed = 6;
  EXPECT_NE(d.hash(), c.hash());
  EXPECT_EQ(StudyConfig::from_json(nlohmann::json::parse(R"({"study":"bk"})")).resolved_slack(), 1.3);
}

TEST(StudyConfig, Validation)
{
  auto parse = [](const char* text) { return StudyConfig::from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(parse(R"({"n_grid":[1000,100]})"), ConfigurationError);
  EXPECT_THROW(parse(R"({"n_grid":[]})"), ConfigurationError);
  EXPECT_THROW(parse(R"({"replications":0})"), ConfigurationError);
  EXPECT_THROW(parse(R"({"study":"nope"})"), ConfigurationError);
  EXPECT_THROW(parse(R"({"n_grid":"x"})"), ConfigurationError);
  EXPECT_THROW(parse(R"({"delta":{"alpha_minus":0.3}})"), DomainError);
  auto lil = small(StudyKind::lil);
  lil.n_grid = { 2, 100 };
  EXPECT_THROW(run_lil_study(lil), ConfigurationError);
  auto spiral = small(StudyKind::consistency);
  spiral.model = ModelSpec::uniform_spiral(2, 0.1);
  EXPECT_THROW(run_consistency_study(spiral), CapabilityError);
  auto clt = small(StudyKind::clt);
  EXPECT_THROW(run_clt_study(clt), ConfigurationError);
}

TEST(ConsistencyStudy, MediansDecreaseAndRowsAreTagged)
{
  const auto r = run_consistency_study(small(StudyKind::consistency));
  EXPECT_TRUE(r.passed());
  EXPECT_LT(only(r, "median_sup_error", 10000), only(r, "median_sup_error", 1000));
  EXPECT_EQ(r.values("sup_error", 1000).size(), 20u);
  EXPECT_EQ(r.values("hausdorff[alpha=0.6]", 1000).size(), 20u);
  EXPECT_EQ(r.values("hausdorff[alpha=0.75]", 1000).size(), 20u);
  EXPECT_EQ(r.values("hausdorff[alpha=0.9]", 10000).size(), 20u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.config_hash, r.config_hash);
    EXPECT_EQ(row.seed, 0u);
    EXPECT_EQ(row.study, "consistency");
  }
  EXPECT_GT(only(r, "h_min", 0), 0.0);
  EXPECT_GE(only(r, "h_max", 0), only(r, "h_min", 0));
}

TEST(ConsistencyStudy, ReproducibleAndThreadInvariant)
{
  auto c = small(StudyKind::consistency);
  c.replications = 1;
  EXPECT_EQ(format_report_csv(run_consistency_study(c)), format_report_csv(run_consistency_study(c)));
  c.replications = 6;
  const auto one = format_report_csv(run_consistency_study(c));
  c.threads = 3;
  EXPECT_EQ(format_report_csv(run_consistency_study(c)), one);
}

TEST(ConsistencyStudy, GridRefinementIsStable)
{
  auto c = small(StudyKind::consistency);
  c.n_grid = { 10000 };
  c.directions = 200;
  c.refine_check = true;
  const auto r = run_consistency_study(c);
  const auto* check = find_check(r, "grid_refinement_stable[n=10000]");
  ASSERT_NE(check, nullptr);
  EXPECT_TRUE(check->passed) << check->detail;
}

TEST(LilStudy, RatioPositiveAndUnivariateScaling)
{
  auto c = small(StudyKind::lil);
  c.model = ModelSpec::standard_gaussian(1);
  const auto r = run_lil_study(c);
  for (double v : r.values("lil_ratio", 1000)) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
  // direct univariate simulation: sort, index, compare to an erfc bisection quantile
  const auto alphas = DeltaRange{}.grid(9);
  auto z = [](double a) {
    double lo = -10, hi = 10;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / std::numbers::sqrt2) < a ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const auto sup = r.values("sup_error", 1000);
  for (std::size_t rep = 0; rep < 5; ++rep) {
    const auto data = sample(c.model, 1000, c.seed, (std::uint64_t{ 1000 } << 24) | rep);
    std::vector<double> x(1000), neg(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      x[i] = data.points()(static_cast<Eigen::Index>(i), 0);
      neg[i] = -x[i];
    }
    std::sort(x.begin(), x.end());
    std::sort(neg.begin(), neg.end());
    double worst = 0.0;
    for (double a : alphas) {
      const auto k = qsurf::test::naive_rank(1000, a);
      worst = std::max({ worst, std::abs(x[k - 1] - z(a)), std::abs(neg[k - 1] - z(a)) });
    }
    EXPECT_NEAR(sup[rep], worst, 1e-12);
  }
}

TEST(BkStudy, RowsAndReferences)
{
  const auto r = run_bk_study(small(StudyKind::bk));
  EXPECT_EQ(r.values("bk_ratio", 10000).size(), 20u);
  const double med = only(r, "median_bk_ratio", 10000);
  EXPECT_TRUE(std::isfinite(med));
  EXPECT_GT(med, 0.0);
  EXPECT_NEAR(only(r, "rate_bk", 10000), bahadur_kiefer_rate(10000), 1e-15);
  EXPECT_TRUE(std::isfinite(only(r, "oracle_a_n", 1000)));
  EXPECT_NE(find_check(r, "bk_envelope"), nullptr);
}

TEST(CltStudy, SinglePointVarianceAndAntipodalPair)
{
  auto c = small(StudyKind::clt);
  c.n_grid = { 5000 };
  c.replications = 1000;
  c.mc_n = 200000;
  c.points = { { 0, 0.7 }, { 20, 0.7 }, { 10, 0.7 } };
  const auto r = run_clt_study(c);
  const double h = 1.0 / std::sqrt(2.0 * std::numbers::pi) * std::exp(-0.5 * 0.5244005127080407 * 0.5244005127080407);
  const double var = only(r, "cov[0:0]", 5000);
  EXPECT_NEAR(var, 0.21 / (h * h), 0.15 * 0.21 / (h * h));
  // antipodal pair: P(H and H') = 2 alpha - 1
  for (const auto& row : r.rows)
    if (row.stat == "cov[0:1]")
      EXPECT_NEAR(row.reference, (0.4 - 0.49) / (h * h), 0.05);
  EXPECT_TRUE(r.passed());
}

TEST(CoverageStudy, MonotoneInLevelAndStableInDraws)
{
  auto c = small(StudyKind::coverage);
  c.n_grid = { 2000 };
  c.replications = 60;
  c.directions = 36;
  c.draws = 500;
  const double high = only(run_coverage_study(c), "coverage", 2000);
  c.level = 0.5;
  const double low = only(run_coverage_study(c), "coverage", 2000);
  EXPECT_LT(low, high);
  c.level = 0.95;
  c.draws = 1000;
  const double doubled = only(run_coverage_study(c), "coverage", 2000);
  EXPECT_LE(std::abs(doubled - high), 2.0 * std::sqrt(0.25 / 60.0));
}

TEST(PsiStudy, UniformSquareRatioStable)
{
  StudyConfig c;
  c.study = StudyKind::psi;
  c.model = ModelSpec::uniform_box(qsurf::test::pt({ 0, 0 }), qsurf::test::pt({ 1, 1 }));
  c.n_grid = { 20000 };
  c.replications = 3;
  c.directions = 72;
  const auto r = run_psi_study(c);
  EXPECT_TRUE(r.passed());
  for (double e : { 0.01, 0.02, 0.05 }) {
    char tag[64];
    std::snprintf(tag, sizeof tag, "median_psi_ratio[eps=%g]", e);
    const double v = only(r, tag, 20000);
    EXPECT_GT(v, 0.3);
    EXPECT_LT(v, 1.5);
  }
}

TEST(EmitReport, EmptyReportIsHeaderOnly)
{
  StudyReport r;
  EXPECT_EQ(format_report_csv(r), std::string(kReportHeader) + "\n");
  EXPECT_TRUE(parse_report_csv(format_report_csv(r)).empty());
}

TEST(EmitReport, ByteIdenticalAndRoundTrip)
{
  auto c = small(StudyKind::bk);
  c.replications = 3;
  const auto r = run_bk_study(c);
  const auto dir = std::filesystem::temp_directory_path() / "qsurf_verify_test";
  std::filesystem::create_directories(dir);
  emit_report(r, dir / "a.csv", ReportFormat::csv);
  emit_report(r, dir / "b.csv", ReportFormat::csv);
  const auto a = read_text_file(dir / "a.csv");
  EXPECT_EQ(a, read_text_file(dir / "b.csv"));
  const auto rows = parse_report_csv(a);
  ASSERT_EQ(rows.size(), r.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].stat, r.rows[i].stat);
    EXPECT_EQ(rows[i].n, r.rows[i].n);
    EXPECT_EQ(rows[i].rep, r.rows[i].rep);
    EXPECT_EQ(rows[i].config_hash, r.rows[i].config_hash);
    if (std::isnan(r.rows[i].value))
      EXPECT_TRUE(std::isnan(rows[i].value));
    else
      EXPECT_EQ(rows[i].value, r.rows[i].value);
    if (std::isnan(r.rows[i].reference))
      EXPECT_TRUE(std::isnan(rows[i].reference));
    else
      EXPECT_EQ(rows[i].reference, r.rows[i].reference);
  }
  emit_report(r, dir / "a.json", ReportFormat::json);
  const auto doc = nlohmann::json::parse(read_text_file(dir / "a.json"));
  EXPECT_EQ(doc.at("config_hash"), r.config_hash);
  EXPECT_EQ(doc.at("rows").size(), r.rows.size());
  EXPECT_THROW(parse_report_csv("bad,header\n"), ParseError);
  EXPECT_THROW(emit_report(r, dir / "missing" / "x.csv", ReportFormat::csv), Error);
}
