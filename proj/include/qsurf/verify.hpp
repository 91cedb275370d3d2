#pragma once

#include "qsurf/models.hpp"
#include "qsurf/quantiles.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace qsurf {

enum class StudyKind
{
  consistency,
  lil,
  clt,
  bk,
  psi,
  coverage
};

std::string_view to_string(StudyKind kind);
StudyKind study_kind_from_string(std::string_view name);

//! A (direction index, level) pair watched by the CLT study.
struct CltPoint
{
  std::size_t direction;
  double alpha;
};

/// Study configuration. Fields that do not apply to a study are ignored but
/// still hashed, so two configs with the same hash ran the same code path.
struct StudyConfig
{
  StudyKind study = StudyKind::consistency;
  ModelSpec model = ModelSpec::standard_gaussian(2);
  std::vector<std::size_t> n_grid{ 1000, 10000, 100000 };
  std::size_t replications = 100;
  std::size_t directions = 200; //!< forced to 2 for d = 1
  DeltaRange delta{};
  int alpha_steps = 9;
  std::uint64_t seed = 0;
  unsigned threads = 0; //!< not hashed; output does not depend on it

  double slack = 0.0; //!< <= 0 selects the study default

  Point observer; //!< empty means the origin

  // consistency
  bool refine_check = false;

  // clt
  std::vector<CltPoint> points; //!< empty selects four default points
  std::size_t mc_n = 2000000;

  // coverage
  double alpha = 0.7;
  double level = 0.95;
  std::size_t draws = 2000;
  double bandwidth = 0.0;
  bool studentized = false;
  double coverage_min = 0.90;
  double coverage_max = 0.99;

  // psi
  std::vector<double> eps{ 0.01, 0.02, 0.05 };

  //! Reads a config document; absent fields keep their defaults.
  static StudyConfig from_json(const nlohmann::json& doc);
  //! Canonical form with every field resolved.
  nlohmann::ordered_json to_json() const;
  //! 16 hex digits of FNV-1a over the canonical form.
  std::string hash() const;
  //! Throws ConfigurationError on inconsistent fields.
  void validate() const;

  double resolved_slack() const;
  std::size_t resolved_directions() const;
  Point resolved_observer() const;
  std::vector<CltPoint> resolved_points() const;
};

inline constexpr double kNoReference = std::numeric_limits<double>::quiet_NaN();

/// One long-format record. Aggregates carry rep = -1; envelope checks carry
/// stat "check:<name>" with value 1 (pass) or 0 (fail).
struct ReportRow
{
  std::string study;
  std::size_t n = 0;
  long long rep = -1;
  std::string stat;
  double value = 0.0;
  double reference = kNoReference;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct StudyCheck
{
  std::string name;
  bool passed = false;
  std::string detail;
};

struct StudyReport
{
  StudyConfig config;
  std::string config_hash;
  std::vector<ReportRow> rows;
  std::vector<StudyCheck> checks;

  bool passed() const;
  //! Values of `stat` at sample size n, in row order.
  std::vector<double> values(std::string_view stat, std::size_t n) const;
};

//! Rate references.
double lil_rate(std::size_t n); //!< sqrt(log log n / n), n >= 3
double coupling_rate(std::size_t n, int dims); //!< n^{-v_d} (log n)^{w_d}
double coupling_exponent_v(int dims); //!< 1 / (2 + 10 d)
double coupling_exponent_w(int dims); //!< (4 + 10 d) / (4 + 20 d)

StudyReport run_consistency_study(const StudyConfig& cfg);
StudyReport run_lil_study(const StudyConfig& cfg);
StudyReport run_clt_study(const StudyConfig& cfg);
StudyReport run_bk_study(const StudyConfig& cfg);
StudyReport run_coverage_study(const StudyConfig& cfg);
StudyReport run_psi_study(const StudyConfig& cfg);
//! Dispatches on cfg.study.
StudyReport run_study(const StudyConfig& cfg);

enum class ReportFormat
{
  csv,
  json
};

ReportFormat report_format_from_string(std::string_view name);

inline constexpr std::string_view kReportHeader =
  "study,n,rep,stat,value,reference,seed,config_hash";

//! CSV with the header above; reals printed with 17 significant digits.
std::string format_report_csv(const StudyReport& report);
//! {study, config, config_hash, passed, checks, rows}.
nlohmann::ordered_json report_to_json(const StudyReport& report);
std::vector<ReportRow> parse_report_csv(std::string_view text);
void emit_report(const StudyReport& report,
                 const std::filesystem::path& path,
                 ReportFormat format);

} // namespace qsurf
