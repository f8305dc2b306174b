#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "cellrecon/error.hpp"
#include "cellrecon/reconstruct.hpp"

namespace cellrecon {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Points scattered uniformly in discs of radius `radius` around `centres`.
void scatter_near(const std::vector<Point2>& centres, int count, double radius, std::mt19937_64& rng,
                  std::vector<Point2>& out) {
  if (centres.empty() || count <= 0) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double kTwoPi = 6.283185307179586;
  for (int k = 0; k < count; ++k) {
    const auto idx = static_cast<std::size_t>(static_cast<double>(k) * centres.size() / count);
    const double rho = radius * std::sqrt(unit(rng)), phi = kTwoPi * unit(rng);
    const Point2 c = centres[std::min(idx, centres.size() - 1)];
    out.push_back({clamp01(c.x + rho * std::cos(phi)), clamp01(c.y + rho * std::sin(phi))});
  }
}

std::vector<Point2> flatten(const PolylineSet& lines) {
  std::vector<Point2> pts;
  for (const auto& l : lines) pts.insert(pts.end(), l.points.begin(), l.points.end());
  return pts;
}

double grid_h(const PiecewiseReconstruction& r) {
  if (r.curve && r.curve->h > 0.0) return r.curve->h;
  if (r.side1.n() > 0) return r.side1.h();
  if (r.validity) return 1.0 / r.validity->n;
  return 0.0;
}

}  // namespace

double graph_hausdorff(const PiecewiseReconstruction& r, const TestFunction& f, int m, int near_samples,
                       unsigned seed) {
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "graph_hausdorff needs m >= 2");
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(m) * m + 2 * static_cast<std::size_t>(near_samples));
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) pts.push_back({(a + 0.5) / m, (b + 0.5) / m});

  const double h = grid_h(r);
  std::mt19937_64 rng(seed);
  if (f.curve) scatter_near(flatten(f.curve->sample(near_samples)), near_samples, 2.0 * h, rng, pts);
  std::optional<SegmentIndex> approx;
  if (r.curve && !r.curve->polylines.empty()) {
    scatter_near(flatten(r.curve->polylines), near_samples, 2.0 * h, rng, pts);
    approx.emplace(r.curve->polylines);
  }

  double worst = 0.0;
  for (const auto& p : pts) {
    const double fv = f(p.x, p.y);
    const double rv = evaluate(r, p.x, p.y);
    // (p, f(p)) against the graph of the reconstruction
    double d_f = std::abs(fv - rv);
    if (approx) {
      // only curve points closer than the vertical gap can improve on it
      const auto hit = approx->nearest(p, d_f);
      const double planar2 = hit.distance * hit.distance;
      for (const TensorSpline* s : {&r.spline1, &r.spline2}) {
        if (s->empty() || !std::isfinite(hit.distance)) continue;
        const double v = (*s)(hit.point);
        if (std::isfinite(v)) d_f = std::min(d_f, std::sqrt(planar2 + (fv - v) * (fv - v)));
      }
    }
    // (p, r(p)) against the graph of f
    double d_r = std::abs(fv - rv);
    if (f.curve) {
      const Point2 c = f.curve->closest_point(p);
      const double planar2 = dot(p - c, p - c);
      for (const auto* piece : {&f.piece1, &f.piece2}) {
        const double v = (*piece)(c.x, c.y);
        d_r = std::min(d_r, std::sqrt(planar2 + (rv - v) * (rv - v)));
      }
    }
    worst = std::max({worst, d_f, d_r});
  }
  return worst;
}

namespace {

template <class Keep>
ErrorSummary sampled_error(const PiecewiseReconstruction& r, const TestFunction& f, int m, double tube, Keep keep) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "sample resolution must be positive");
  std::optional<SegmentIndex> approx;
  if (tube > 0.0 && r.curve && !r.curve->polylines.empty()) approx.emplace(r.curve->polylines);
  ErrorSummary out;
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      const Point2 p{(a + 0.5) / m, (b + 0.5) / m};
      if (!keep(p)) continue;
      if (approx && approx->nearest(p).distance < tube) continue;
      out.max_error = std::max(out.max_error, std::abs(f(p.x, p.y) - evaluate(r, p.x, p.y)));
      ++out.count;
    }
  return out;
}

}  // namespace

ErrorSummary farfield_error(const PiecewiseReconstruction& r, const TestFunction& f, int m, double min_dist,
                            double tube) {
  return sampled_error(r, f, m, tube, [&](Point2 p) { return !f.curve || f.curve->distance(p) >= min_dist; });
}

ErrorSummary nearfield_error(const PiecewiseReconstruction& r, const TestFunction& f, int m, double max_dist,
                             double tube) {
  if (!f.curve) throw Error(ErrorCode::InvalidArgument, "near-field error needs a function with a curve");
  return sampled_error(r, f, m, tube, [&](Point2 p) { return f.curve->distance(p) <= max_dist; });
}

}  // namespace cellrecon
