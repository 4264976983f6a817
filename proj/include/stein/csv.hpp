#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stein/point_set.hpp"

namespace stein {

/// Quote a CSV field when it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

/// Split one CSV line into fields, honoring quoted fields with doubled
/// quotes. Throws ParseError (with the given line number) on malformed input.
std::vector<std::string> csv_split(const std::string& line, std::size_t line_number);

/// Point-set CSV: header x1,...,xd then one row per point with
/// 17-significant-digit decimals.
void write_point_set_csv(const std::filesystem::path& path, const PointSet& points);
PointSet read_point_set_csv(const std::filesystem::path& path);

}  // namespace stein
