#include "cellrecon/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cellrecon/error.hpp"
#include "cellrecon/log.hpp"

namespace cellrecon {

std::string to_string(CurveStage stage) {
  switch (stage) {
    case CurveStage::First: return "first";
    case CurveStage::Enhanced: return "enhanced";
    case CurveStage::Exact: return "exact";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// SegmentIndex

SegmentIndex::SegmentIndex(const PolylineSet& lines, double cell_size) {
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto& pts = lines[l].points;
    if (pts.empty()) continue;
    const std::size_t segs = pts.size() == 1 ? 1 : (lines[l].closed ? pts.size() : pts.size() - 1);
    for (std::size_t k = 0; k < segs; ++k) {
      const Point2 a = pts[k], b = pts.size() == 1 ? pts[0] : pts[(k + 1) % pts.size()];
      segments_.push_back({a, b, static_cast<int>(l), static_cast<int>(k)});
      xmin = std::min({xmin, a.x, b.x}), xmax = std::max({xmax, a.x, b.x});
      ymin = std::min({ymin, a.y, b.y}), ymax = std::max({ymax, a.y, b.y});
    }
  }
  if (segments_.empty()) return;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  if (cell_size <= 0.0) {
    // ~sqrt(#segments) bins per axis keeps both near and far queries cheap
    const double per_axis = std::clamp(std::sqrt(static_cast<double>(segments_.size())), 16.0, 256.0);
    cell_size = std::max(span / per_axis, 1e-12);
  }
  cell_ = cell_size;
  x0_ = xmin, y0_ = ymin;
  nx_ = std::max(1, static_cast<int>(std::ceil((xmax - xmin) / cell_)) + 1);
  ny_ = std::max(1, static_cast<int>(std::ceil((ymax - ymin) / cell_)) + 1);
  bins_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const auto& seg = segments_[s];
    const int bx0 = bin_x(std::min(seg.a.x, seg.b.x)), bx1 = bin_x(std::max(seg.a.x, seg.b.x));
    const int by0 = bin_y(std::min(seg.a.y, seg.b.y)), by1 = bin_y(std::max(seg.a.y, seg.b.y));
    for (int by = by0; by <= by1; ++by)
      for (int bx = bx0; bx <= bx1; ++bx) bins_[static_cast<std::size_t>(by) * nx_ + bx].push_back(static_cast<int>(s));
  }
}

int SegmentIndex::bin_x(double x) const {
  return std::clamp(static_cast<int>(std::floor((x - x0_) / cell_)), 0, nx_ - 1);
}
int SegmentIndex::bin_y(double y) const {
  return std::clamp(static_cast<int>(std::floor((y - y0_) / cell_)), 0, ny_ - 1);
}

SegmentIndex::Hit SegmentIndex::nearest(Point2 p, double limit) const {
  Hit best;
  best.distance = std::numeric_limits<double>::infinity();
  if (segments_.empty()) return best;
  const int cx = bin_x(p.x), cy = bin_y(p.y);
  const int max_ring = std::max(nx_, ny_);
  for (int r = 0; r <= max_ring; ++r) {
    for (int by = cy - r; by <= cy + r; ++by) {
      if (by < 0 || by >= ny_) continue;
      const bool edge_row = by == cy - r || by == cy + r;
      for (int bx = cx - r; bx <= cx + r; bx += (edge_row || r == 0) ? 1 : 2 * r) {
        if (bx < 0 || bx >= nx_) continue;
        for (int s : bins_[static_cast<std::size_t>(by) * nx_ + bx]) {
          const auto& seg = segments_[static_cast<std::size_t>(s)];
          const Point2 q = project_to_segment(p, seg.a, seg.b);
          const double d = distance(p, q);
          if (d < best.distance) best = {d, q, seg.line, seg.index};
        }
      }
    }
    // anything not yet visited lies outside the box of rings <= r
    const double left = x0_ + (cx - r) * cell_, right = x0_ + (cx + r + 1) * cell_;
    const double bottom = y0_ + (cy - r) * cell_, top = y0_ + (cy + r + 1) * cell_;
    double bound = std::numeric_limits<double>::infinity();
    if (cx - r > 0) bound = std::min(bound, std::max(0.0, p.x - left));
    if (cx + r < nx_ - 1) bound = std::min(bound, std::max(0.0, right - p.x));
    if (cy - r > 0) bound = std::min(bound, std::max(0.0, p.y - bottom));
    if (cy + r < ny_ - 1) bound = std::min(bound, std::max(0.0, top - p.y));
    if (best.distance <= bound || bound >= limit) break;
  }
  return best;
}

// ---------------------------------------------------------------------------
// First stage

ImplicitCurve first_stage_curve(const CellPartition& part, const FirstStageOptions& options) {
  if (part.u0.empty() || part.u1.empty() || part.u2.empty())
    throw Error(ErrorCode::InvalidArgument, "first-stage curve needs non-empty U0, U1 and U2");
  const double h = 1.0 / part.n;
  auto centre = [h](CellIndex c) { return Point2{(c.i - 0.5) * h, (c.j - 0.5) * h}; };
  std::vector<Point2> band;
  band.reserve(part.u0.size());
  for (auto c : part.u0) band.push_back(centre(c));

  std::vector<Sample> samples;
  samples.reserve(part.u1.size() + part.u2.size());
  auto add = [&](const std::vector<CellIndex>& cells, double sign) {
    for (auto c : cells) {
      const Point2 p = centre(c);
      double d = std::numeric_limits<double>::infinity();
      for (const auto& b : band) d = std::min(d, distance(p, b));
      samples.push_back({p.x, p.y, sign * (d + h)});
    }
  };
  add(part.u1, 1.0);
  add(part.u2, -1.0);

  const LeastSquaresFit fit = fit_least_squares(samples, 3, options.knot_spacing);
  ImplicitCurve curve;
  curve.spline = fit.spline;
  curve.stage = CurveStage::First;
  curve.knot_spacing = options.knot_spacing;
  curve.h = h;
  ContourOptions contour;
  contour.resolution = options.resolution > 0 ? options.resolution : std::max(256, 4 * part.n);
  curve.polylines = zero_level_curve(curve.spline, contour);
  return curve;
}

// ---------------------------------------------------------------------------
// Enhanced stage

int enhanced_mesh_size(double h, double multiplier, int min_mesh) {
  if (!(h > 0.0) || !(multiplier > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad mesh parameters");
  return std::max(min_mesh, static_cast<int>(std::ceil(multiplier * std::pow(h, -0.75) - 1e-9)));
}

namespace {

ImplicitCurve enhanced_from_index(const SegmentIndex& index, const std::function<int(Point2, const SegmentIndex::Hit&)>& side,
                                  double h, const EnhancedOptions& options) {
  const int m = enhanced_mesh_size(h, options.mesh_multiplier, options.min_mesh);
  const double step = 1.0 / (m - 1);
  std::vector<double> values(static_cast<std::size_t>(m) * m);
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      const Point2 p{a * step, b * step};
      const auto hit = index.nearest(p);
      values[static_cast<std::size_t>(b) * m + a] = side(p, hit) * hit.distance;
    }
  ImplicitCurve curve;
  curve.spline = quasi_fit_on_mesh(values, m);
  curve.stage = CurveStage::Enhanced;
  curve.mesh_n = m;
  curve.knot_spacing = step;
  curve.h = h;
  ContourOptions contour;
  contour.resolution = options.resolution > 0 ? options.resolution : std::max(256, 4 * m);
  contour.max_segment = std::min(h * h, 1.0 / (contour.resolution - 1));
  curve.polylines = zero_level_curve(curve.spline, contour);
  return curve;
}

}  // namespace

ImplicitCurve enhanced_curve(const PolylineSet& g_lines, const std::function<int(Point2)>& side, double h,
                             const EnhancedOptions& options) {
  SegmentIndex index(g_lines);
  if (index.empty()) throw Error(ErrorCode::EmptyChain, "empty point set G");
  return enhanced_from_index(index, [&](Point2 p, const SegmentIndex::Hit&) { return side(p); }, h, options);
}

ImplicitCurve enhanced_curve(const std::vector<QuadraticArc>& arcs, const CellPartition& part, double h,
                             const EnhancedOptions& options) {
  if (arcs.empty()) throw Error(ErrorCode::EmptyChain, "no arcs for the enhanced curve");
  // resample every arc at arc-length spacing <= h^2
  PolylineSet lines;
  lines.reserve(arcs.size());
  for (const auto& arc : arcs) {
    const auto coarse = arc.sample(17);
    double len = 0.0;
    for (std::size_t k = 1; k < coarse.size(); ++k) len += distance(coarse[k - 1], coarse[k]);
    const int count = std::max(17, static_cast<int>(std::ceil(1.01 * len / (h * h))) + 1);
    lines.push_back({arc.sample(count), false});
  }
  SegmentIndex index(lines);

  int ambiguous = 0;
  auto side = [&](Point2 p, const SegmentIndex::Hit& hit) {
    const auto& arc = arcs[static_cast<std::size_t>(hit.line)];
    if (hit.distance < 2.0 * h) return arc.below(p) ? 1 : -1;
    const int i = std::clamp(static_cast<int>(std::floor(p.x / h)) + 1, 1, part.n);
    const int j = std::clamp(static_cast<int>(std::floor(p.y / h)) + 1, 1, part.n);
    switch (part.label(i, j)) {
      case 1: return 1;
      case 2: return -1;
      default: ++ambiguous; return arc.below(p) ? 1 : -1;
    }
  };
  ImplicitCurve curve = enhanced_from_index(index, side, h, options);
  if (ambiguous > 0)
    log::debug("enhanced_curve: " + std::to_string(ambiguous) + " mesh points signed by the nearest arc");
  return curve;
}

// ---------------------------------------------------------------------------
// Distances

namespace {

bool inside_margin(Point2 p, double margin) {
  return std::min({p.x, 1.0 - p.x, p.y, 1.0 - p.y}) > margin;
}

struct OneSided {
  double max = 0.0, clipped = 0.0, sum = 0.0;
  std::size_t count = 0;

  void add(Point2 p, double d, double margin) {
    max = std::max(max, d);
    if (margin <= 0.0 || inside_margin(p, margin)) clipped = std::max(clipped, d);
    sum += d;
    ++count;
  }
};

CurveDistance combine(const OneSided& ab, const OneSided& ba) {
  CurveDistance out;
  out.hausdorff = std::max(ab.max, ba.max);
  out.clipped_hausdorff = std::max(ab.clipped, ba.clipped);
  const double ma = ab.count ? ab.sum / ab.count : 0.0, mb = ba.count ? ba.sum / ba.count : 0.0;
  out.mean = 0.5 * (ma + mb);
  out.n_points = ab.count + ba.count;
  return out;
}

std::vector<Point2> vertices(const PolylineSet& lines) {
  std::vector<Point2> pts;
  for (const auto& l : lines) pts.insert(pts.end(), l.points.begin(), l.points.end());
  return pts;
}

}  // namespace

CurveDistance curve_distance(const PolylineSet& a, const PolylineSet& b, double margin) {
  const auto va = vertices(a), vb = vertices(b);
  if (va.empty() || vb.empty()) throw Error(ErrorCode::InvalidArgument, "curve_distance needs non-empty curves");
  const SegmentIndex ia(a), ib(b);
  OneSided ab, ba;
  for (const auto& p : va) ab.add(p, ib.nearest(p).distance, margin);
  for (const auto& p : vb) ba.add(p, ia.nearest(p).distance, margin);
  return combine(ab, ba);
}

CurveDistance curve_distance(const PolylineSet& a, const AnalyticCurve& b, double margin, int samples) {
  const auto va = vertices(a);
  if (va.empty()) throw Error(ErrorCode::InvalidArgument, "curve_distance needs a non-empty polyline set");
  const auto vb = vertices(b.sample(std::max(samples, 10000)));
  const SegmentIndex ia(a);
  OneSided ab, ba;
  for (const auto& p : va) ab.add(p, b.distance(p), margin);
  for (const auto& p : vb) ba.add(p, ia.nearest(p).distance, margin);
  // the curve is farthest from A between A's vertices: add the curve points
  // nearest to every segment midpoint, which catch chord sagitta exactly
  for (const auto& line : a) {
    const std::size_t m = line.points.size();
    const std::size_t segs = line.closed ? m : (m > 0 ? m - 1 : 0);
    for (std::size_t k = 0; k < segs; ++k) {
      const Point2 c = b.closest_point(0.5 * (line.points[k] + line.points[(k + 1) % m]));
      ba.add(c, ia.nearest(c).distance, margin);
    }
  }
  return combine(ab, ba);
}

double max_distance(std::span<const Point2> points, const AnalyticCurve& curve) {
  double d = 0.0;
  for (const auto& p : points) d = std::max(d, curve.distance(p));
  return d;
}

}  // namespace cellrecon
