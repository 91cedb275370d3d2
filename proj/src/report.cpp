#include "qsurf/error.hpp"
#include "qsurf/serialize.hpp"
#include "qsurf/verify.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qsurf {

namespace {

template<typename T>
T
field(const nlohmann::json& doc, const char* key, T fallback)
{
  if (!doc.contains(key))
    return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigurationError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::string
real(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t
fnv1a(std::string_view text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string_view>
split(std::string_view line, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos)
      return out;
    start = pos + 1;
  }
}

template<typename T>
T
parse_integer(std::string_view s, std::size_t line)
{
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("report line " + std::to_string(line) + ": bad integer '" +
                     std::string(s) + "'");
  return v;
}

double
parse_real(std::string_view s, std::size_t line)
{
  if (s == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  const std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size())
    throw ParseError("report line " + std::to_string(line) + ": bad real '" + tmp + "'");
  return v;
}

} // namespace

StudyConfig
StudyConfig::from_json(const nlohmann::json& doc)
{
  if (!doc.is_object())
    throw ConfigurationError("study config must be an object");
  StudyConfig c;
  if (doc.contains("study"))
    c.study = study_kind_from_string(field<std::string>(doc, "study", ""));
  if (doc.contains("model"))
    c.model = ModelSpec::from_json(doc.at("model"));
  c.n_grid = field(doc, "n_grid", c.n_grid);
  c.replications = field(doc, "replications", c.replications);
  c.directions = field(doc, "directions", c.directions);
  if (doc.contains("delta")) {
    const auto& d = doc.at("delta");
    c.delta = DeltaRange::make(field(d, "alpha_minus", c.delta.alpha_minus),
                               field(d, "alpha_plus", c.delta.alpha_plus));
  }
  c.alpha_steps = field(doc, "alpha_steps", c.alpha_steps);
  c.seed = field(doc, "seed", c.seed);
  c.threads = field(doc, "threads", c.threads);
  c.slack = field(doc, "slack", c.slack);
  if (doc.contains("observer")) {
    const auto v = field<std::vector<double>>(doc, "observer", {});
    c.observer = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  c.refine_check = field(doc, "refine_check", c.refine_check);
  if (doc.contains("points")) {
    for (const auto& p : doc.at("points"))
      c.points.push_back({ field<std::size_t>(p, "direction", 0), field(p, "alpha", 0.7) });
  }
  c.mc_n = field(doc, "mc_n", c.mc_n);
  c.alpha = field(doc, "alpha", c.alpha);
  c.level = field(doc, "level", c.level);
  c.draws = field(doc, "draws", c.draws);
  c.bandwidth = field(doc, "bandwidth", c.bandwidth);
  c.studentized = field(doc, "studentized", c.studentized);
  if (doc.contains("coverage_range")) {
    const auto r = field<std::vector<double>>(doc, "coverage_range", {});
    if (r.size() != 2)
      throw ConfigurationError("coverage_range must be [min, max]");
    c.coverage_min = r[0];
    c.coverage_max = r[1];
  }
  c.eps = field(doc, "eps", c.eps);
  c.validate();
  return c;
}

nlohmann::ordered_json
StudyConfig::to_json() const
{
  nlohmann::ordered_json j;
  j["study"] = std::string(to_string(study));
  j["model"] = model.to_json();
  j["n_grid"] = n_grid;
  j["replications"] = replications;
  j["directions"] = resolved_directions();
  j["delta"] = { { "alpha_minus", delta.alpha_minus }, { "alpha_plus", delta.alpha_plus } };
  j["alpha_steps"] = alpha_steps;
  j["seed"] = seed;
  j["slack"] = resolved_slack();
  j["observer"] = qsurf::to_json(resolved_observer());
  j["refine_check"] = refine_check;
  auto pts = nlohmann::ordered_json::array();
  if (study == StudyKind::clt)
    for (const auto& p : resolved_points())
      pts.push_back({ { "direction", p.direction }, { "alpha", p.alpha } });
  j["points"] = pts;
  j["mc_n"] = mc_n;
  j["alpha"] = alpha;
  j["level"] = level;
  j["draws"] = draws;
  j["bandwidth"] = bandwidth;
  j["studentized"] = studentized;
  j["coverage_range"] = { coverage_min, coverage_max };
  j["eps"] = eps;
  return j;
}

std::string
StudyConfig::hash() const
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

void
StudyConfig::validate() const
{
  if (n_grid.empty())
    throw ConfigurationError("n_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1)
      throw ConfigurationError("sample sizes must be positive");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw ConfigurationError("n_grid must be strictly ascending");
  }
  if (replications < 1)
    throw ConfigurationError("replications must be at least 1");
  if (replications >= (std::size_t{ 1 } << 24))
    throw ConfigurationError("replications must be below 2^24");
  if (alpha_steps < 1)
    throw ConfigurationError("alpha_steps must be at least 1");
  DeltaRange::make(delta.alpha_minus, delta.alpha_plus);
  if (observer.size() != 0 && observer.size() != model.dims())
    throw ConfigurationError("observer dimension differs from the model");
  if (points.size() > 8)
    throw ConfigurationError("clt study watches at most 8 points");
  for (const auto& p : points)
    if (!(p.alpha > 0.0 && p.alpha < 1.0))
      throw ConfigurationError("clt point levels must lie in (0, 1)");
  if (!(alpha >= 0.5 && alpha < 1.0))
    throw ConfigurationError("alpha must lie in [1/2, 1)");
  if (!(level >= 0.0 && level < 1.0))
    throw ConfigurationError("level must lie in [0, 1)");
  if (mc_n < 10000)
    throw ConfigurationError("mc_n must be at least 10000");
  if (!(coverage_min <= coverage_max))
    throw ConfigurationError("coverage_range must be ordered");
  if (eps.empty())
    throw ConfigurationError("eps list must not be empty");
  for (double e : eps)
    if (!(e > 0.0) || !std::isfinite(e))
      throw ConfigurationError("eps values must be positive");
}

double
StudyConfig::resolved_slack() const
{
  if (slack > 0.0)
    return slack;
  switch (study) {
    case StudyKind::lil:
      return 1.5;
    case StudyKind::bk:
      return 1.3;
    case StudyKind::psi:
      return 2.0;
    default:
      return 1.0;
  }
}

std::size_t
StudyConfig::resolved_directions() const
{
  return model.dims() == 1 ? 2 : directions;
}

Point
StudyConfig::resolved_observer() const
{
  return observer.size() == 0 ? Point::Zero(model.dims()) : observer;
}

std::vector<CltPoint>
StudyConfig::resolved_points() const
{
  if (!points.empty())
    return points;
  const std::size_t k = resolved_directions();
  if (model.dims() >= 2 && k % 4 == 0)
    return { { 0, 0.7 }, { k / 4, 0.7 }, { k / 2, 0.7 }, { 0, 0.9 } };
  // antipode of direction 0 on the built-in grids
  const std::size_t anti = model.dims() == 1 ? 1 : k / 2;
  return { { 0, 0.7 }, { anti, 0.7 }, { 0, 0.9 } };
}

ReportFormat
report_format_from_string(std::string_view name)
{
  if (name == "csv")
    return ReportFormat::csv;
  if (name == "json")
    return ReportFormat::json;
  throw ConfigurationError("unknown report format '" + std::string(name) + "'");
}

std::string
format_report_csv(const StudyReport& report)
{
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : report.rows) {
    out += r.study;
    out += ',' + std::to_string(r.n);
    out += ',' + std::to_string(r.rep);
    out += ',' + r.stat;
    out += ',' + real(r.value);
    out += ',' + real(r.reference);
    out += ',' + std::to_string(r.seed);
    out += ',' + r.config_hash;
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json
report_to_json(const StudyReport& report)
{
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v))
      return v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["study"] = std::string(to_string(report.config.study));
  j["config"] = report.config.to_json();
  j["config_hash"] = report.config_hash;
  j["passed"] = report.passed();
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : report.checks)
    checks.push_back({ { "name", c.name }, { "passed", c.passed }, { "detail", c.detail } });
  j["checks"] = checks;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows)
    rows.push_back({ { "n", r.n },
                     { "rep", r.rep },
                     { "stat", r.stat },
                     { "value", num(r.value) },
                     { "reference", num(r.reference) },
                     { "seed", r.seed } });
  j["rows"] = rows;
  return j;
}

std::vector<ReportRow>
parse_report_csv(std::string_view text)
{
  std::vector<ReportRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kReportHeader)
        throw ParseError("report header mismatch");
      continue;
    }
    if (line.empty())
      continue;
    const auto f = split(line, ',');
    if (f.size() != 8)
      throw ParseError("report line " + std::to_string(line_no) + ": expected 8 fields");
    ReportRow r;
    r.study = std::string(f[0]);
    r.n = parse_integer<std::size_t>(f[1], line_no);
    r.rep = parse_integer<long long>(f[2], line_no);
    r.stat = std::string(f[3]);
    r.value = parse_real(f[4], line_no);
    r.reference = parse_real(f[5], line_no);
    r.seed = parse_integer<std::uint64_t>(f[6], line_no);
    r.config_hash = std::string(f[7]);
    rows.push_back(std::move(r));
  }
  if (line_no == 0)
    throw ParseError("empty report");
  return rows;
}

void
emit_report(const StudyReport& report, const std::filesystem::path& path, ReportFormat format)
{
  write_text_file(path, format == ReportFormat::csv ? format_report_csv(report)
                                                    : dump_document(report_to_json(report)));
}

} // namespace qsurf
