#pragma once

#include "qsurf/inference.hpp"
#include "qsurf/quantiles.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace qsurf {

using ordered_json = nlohmann::ordered_json;

//! Parses "x,y,..." into a point.
Point parse_point(std::string_view text);

ordered_json to_json(const Point& p);
ordered_json to_json(const QuantileSurface& surface);
ordered_json to_json(const ConfidenceBand& band);
ordered_json to_json(const TukeyRegion2D& region);

/// Surface document: {observer, alpha, grid: {scheme, dims, count},
/// entries: [{u, y, q}]} in that field order. Numbers round-trip exactly.
QuantileSurface surface_from_json(const nlohmann::json& doc);

//! Pretty-printed document with a trailing newline.
std::string dump_document(const ordered_json& doc);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

} // namespace qsurf
