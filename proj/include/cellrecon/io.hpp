#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cellrecon/curve.hpp"
#include "cellrecon/edge.hpp"
#include "cellrecon/grid.hpp"
#include "cellrecon/reconstruct.hpp"
#include "cellrecon/signature.hpp"
#include "cellrecon/spline.hpp"

namespace cellrecon::io {

using nlohmann::json;

/// Shortest text that round-trips to the same double ("%.17g").
std::string format_double(double v);

/// Header "n=<int>,h=<value>", then n lines of n comma-separated values; line j is row j.
std::string grid_to_csv(const CellGrid& g);
CellGrid grid_from_csv(const std::string& text);

/// Header "n=..,h=..,pad=..", then rows 1-pad..n+pad; unknown cells are "nan".
std::string extended_grid_to_csv(const ExtendedCellGrid& g);

/// "x,y" per line, polylines separated by a blank line.
std::string polylines_to_csv(const PolylineSet& lines);

json spline_to_json(const TensorSpline& s);
TensorSpline spline_from_json(const json& j);
json partition_to_json(const CellPartition& p);
json arcs_to_json(const ArcChain& chain);
json provenance_to_json(const ExtendedCellGrid& g);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace cellrecon::io
