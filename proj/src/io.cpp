#include "cellrecon/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cellrecon/error.hpp"

namespace cellrecon::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string grid_to_csv(const CellGrid& g) {
  std::string out = "n=" + std::to_string(g.n()) + ",h=" + format_double(g.h()) + "\n";
  for (int j = 1; j <= g.n(); ++j) {
    for (int i = 1; i <= g.n(); ++i) {
      if (i > 1) out += ',';
      out += format_double(g(i, j));
    }
    out += '\n';
  }
  return out;
}

CellGrid grid_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("n=", 0) != 0) throw Error(ErrorCode::Io, "grid CSV: missing n= header");
  int n = 0;
  try {
    n = std::stoi(line.substr(2));
  } catch (const std::exception&) {
    throw Error(ErrorCode::Io, "grid CSV: bad header '" + line + "'");
  }
  if (n < 1) throw Error(ErrorCode::Io, "grid CSV: n must be positive");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n) * n);
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    int cols = 0;
    while (std::getline(cells, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Io, "grid CSV: bad value '" + cell + "' in row " + std::to_string(rows + 1));
      }
      ++cols;
    }
    if (cols != n) throw Error(ErrorCode::Io, "grid CSV: row " + std::to_string(rows + 1) + " has " +
                                                  std::to_string(cols) + " values, expected " + std::to_string(n));
    ++rows;
  }
  if (rows != n) throw Error(ErrorCode::Io, "grid CSV: expected " + std::to_string(n) + " rows");
  return CellGrid(n, std::move(values));
}

std::string extended_grid_to_csv(const ExtendedCellGrid& g) {
  std::string out = "n=" + std::to_string(g.n()) + ",h=" + format_double(g.h()) + ",pad=" + std::to_string(g.pad()) + "\n";
  for (int j = g.lo(); j <= g.hi(); ++j) {
    for (int i = g.lo(); i <= g.hi(); ++i) {
      if (i > g.lo()) out += ',';
      out += g.known(i, j) ? format_double(g.value(i, j)) : "nan";
    }
    out += '\n';
  }
  return out;
}

std::string polylines_to_csv(const PolylineSet& lines) {
  std::string out;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (l > 0) out += '\n';
    for (const auto& p : lines[l].points) out += format_double(p.x) + "," + format_double(p.y) + "\n";
    if (lines[l].closed && !lines[l].points.empty())
      out += format_double(lines[l].points.front().x) + "," + format_double(lines[l].points.front().y) + "\n";
  }
  return out;
}

json spline_to_json(const TensorSpline& s) {
  json coeff = json::array();
  for (double c : s.coefficients()) coeff.push_back(std::isfinite(c) ? json(c) : json(nullptr));
  return {{"degree", s.degree()},
          {"knot_spacing", s.knot_spacing()},
          {"origin", s.origin()},
          {"kmin", s.kmin()},
          {"count", s.count()},
          {"layout", "row-major, l (y index) outer"},
          {"coefficients", coeff}};
}

TensorSpline spline_from_json(const json& j) {
  try {
    std::vector<double> coeff;
    for (const auto& c : j.at("coefficients")) coeff.push_back(c.is_null() ? std::nan("") : c.get<double>());
    return TensorSpline(j.at("degree").get<int>(), j.at("knot_spacing").get<double>(), j.at("origin").get<double>(),
                        j.at("kmin").get<int>(), j.at("count").get<int>(), std::move(coeff));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("spline JSON: ") + e.what());
  }
}

namespace {

json cells_json(const std::vector<CellIndex>& cells) {
  json a = json::array();
  for (auto c : cells) a.push_back({c.i, c.j});
  return a;
}

json frame_json(const Frame& f) { return {{"m", f.m}, {"t", f.t}}; }

}  // namespace

json partition_to_json(const CellPartition& p) {
  return {{"n", p.n},
          {"threshold_mode", p.threshold_mode == ThresholdMode::Theoretical ? "theoretical" : "relative"},
          {"threshold", p.threshold_value},
          {"delta_estimate", p.delta_est},
          {"u0", cells_json(p.u0)},
          {"u1_count", p.u1.size()},
          {"u2_count", p.u2.size()},
          {"labels", p.labels}};
}

json arcs_to_json(const ArcChain& chain) {
  json arcs = json::array();
  for (const auto& a : chain.arcs) {
    arcs.push_back({{"anchor", {a.anchor.i, a.anchor.j}},
                    {"orientation", to_string(a.orientation)},
                    {"frame", frame_json(a.frame)},
                    {"a", a.a},
                    {"b", a.b},
                    {"c", a.c},
                    {"x_range", {a.x_lo, a.x_hi}},
                    {"newton_iterations", a.newton_iters},
                    {"residual", a.residual}});
  }
  return {{"arcs", arcs}, {"skipped", chain.skipped}};
}

json provenance_to_json(const ExtendedCellGrid& g) {
  json filled = json::array();
  for (int j = g.lo(); j <= g.hi(); ++j)
    for (int i = g.lo(); i <= g.hi(); ++i) {
      if (!g.known(i, j)) continue;
      const auto& p = g.provenance(i, j);
      if (p.source != FillProvenance::Source::Extrapolated) continue;
      static const char* dirs[] = {"+x", "-x", "+y", "-y"};
      filled.push_back({{"cell", {i, j}},
                        {"direction", dirs[p.direction]},
                        {"run_start", p.run_start},
                        {"degree", p.degree},
                        {"pass", p.pass}});
    }
  return filled;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write to " + path.string() + " failed");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cellrecon::io
