#include "qsurf/serialize.hpp"

#include "qsurf/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace qsurf {

Point
parse_point(std::string_view text)
{
  std::vector<double> coords;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    auto field = text.substr(start, comma == std::string_view::npos ? text.size() - start
                                                                   : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '+'))
      field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ')
      field.remove_suffix(1);
    double v;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end)
      throw ParseError("cannot parse point '" + std::string(text) + "'");
    coords.push_back(v);
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  Point p(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t i = 0; i < coords.size(); ++i)
    p[static_cast<Eigen::Index>(i)] = coords[i];
  require_finite(p, "point");
  return p;
}

ordered_json
to_json(const Point& p)
{
  auto arr = ordered_json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i)
    arr.push_back(p[i]);
  return arr;
}

ordered_json
to_json(const QuantileSurface& surface)
{
  ordered_json doc;
  doc["observer"] = to_json(surface.observer);
  doc["alpha"] = surface.alpha;
  doc["grid"] = { { "scheme", std::string(to_string(surface.scheme)) },
                  { "dims", surface.dims() },
                  { "count", surface.entries.size() } };
  auto entries = ordered_json::array();
  for (const auto& e : surface.entries) {
    ordered_json item;
    item["u"] = to_json(e.u.vector());
    item["y"] = e.y;
    item["q"] = to_json(e.q);
    entries.push_back(std::move(item));
  }
  doc["entries"] = std::move(entries);
  return doc;
}

ordered_json
to_json(const ConfidenceBand& band)
{
  ordered_json doc = to_json(band.surface);
  doc["level"] = band.level;
  doc["halfwidth"] = band.halfwidth;
  doc["draws"] = band.draws;
  doc["seed"] = band.seed;
  doc["jitter_applied"] = band.jitter_applied;
  doc["critical_value"] = band.critical_value;
  doc["studentized"] = band.studentized;
  doc["h_hat"] = band.h_hat;
  return doc;
}

ordered_json
to_json(const TukeyRegion2D& region)
{
  ordered_json doc;
  doc["alpha"] = region.alpha;
  doc["empty"] = region.empty();
  auto verts = ordered_json::array();
  for (const auto& v : region.vertices)
    verts.push_back({ v.x(), v.y() });
  doc["vertices"] = std::move(verts);
  return doc;
}

QuantileSurface
surface_from_json(const nlohmann::json& doc)
{
  auto point = [](const nlohmann::json& j) {
    Point p(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
      p[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    return p;
  };
  try {
    QuantileSurface s;
    s.observer = point(doc.at("observer"));
    s.alpha = doc.at("alpha").get<double>();
    s.scheme = grid_scheme_from_string(doc.at("grid").at("scheme").get<std::string>());
    for (const auto& e : doc.at("entries")) {
      s.entries.push_back(
        { Direction(point(e.at("u"))), e.at("y").get<double>(), point(e.at("q")) });
      if (s.entries.back().q.size() != s.observer.size() ||
          s.entries.back().u.dims() != s.observer.size())
        throw DimensionError("surface entry dimension differs from the observer");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("surface document: ") + e.what());
  }
}

std::string
dump_document(const ordered_json& doc)
{
  return doc.dump(2) + "\n";
}

void
write_text_file(const std::filesystem::path& path, std::string_view text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out)
    throw Error("failed writing " + path.string());
}

std::string
read_text_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace qsurf
