#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cellrecon/edge.hpp"
#include "cellrecon/geometry.hpp"
#include "cellrecon/grid.hpp"
#include "cellrecon/signature.hpp"
#include "cellrecon/spline.hpp"

namespace cellrecon {

enum class CurveStage { First, Enhanced, Exact };

std::string to_string(CurveStage stage);

/// Zero level set of a bicubic spline; S > 0 on the U1 side.
struct ImplicitCurve {
  TensorSpline spline;
  CurveStage stage = CurveStage::First;
  PolylineSet polylines;
  int mesh_n = 0;           // enhanced: mesh points per axis
  double knot_spacing = 0;  // spline knot spacing
  double h = 0.0;           // grid spacing of the data it came from
};

/// Nearest-segment queries over a set of polylines, bucketed on a uniform grid.
class SegmentIndex {
 public:
  explicit SegmentIndex(const PolylineSet& lines, double cell_size = 0.0);

  struct Hit {
    double distance = 0.0;
    Point2 point;
    int line = -1;     // polyline index
    int segment = -1;  // segment index within the line
  };

  /// Nearest segment; searching stops once nothing closer than `limit` can remain
  /// (the hit then has infinite distance if none was found within it).
  Hit nearest(Point2 p, double limit = std::numeric_limits<double>::infinity()) const;
  bool empty() const noexcept { return segments_.empty(); }

 private:
  struct Segment {
    Point2 a, b;
    int line, index;
  };
  std::vector<Segment> segments_;
  std::vector<std::vector<int>> bins_;
  double x0_ = 0, y0_ = 0, cell_ = 1;
  int nx_ = 1, ny_ = 1;

  int bin_x(double x) const;
  int bin_y(double y) const;
};

struct FirstStageOptions {
  double knot_spacing = 0.25;
  int resolution = 0;  // 0: max(256, 4n)
};

/// Signed-distance least-squares spline from the partition:
/// +(dist to U0 centres + h) on U1 centres, the negative on U2.
ImplicitCurve first_stage_curve(const CellPartition& part, const FirstStageOptions& options = {});

struct EnhancedOptions {
  double mesh_multiplier = 1.0;  // mesh n = ceil(mult * h^(-3/4))
  int min_mesh = 8;
  int resolution = 0;            // 0: max(256, 4 * mesh n)
};

/// ±dist(p, arcs) on a mesh, fitted by the point-value quasi-interpolant.
ImplicitCurve enhanced_curve(const std::vector<QuadraticArc>& arcs, const CellPartition& part, double h,
                             const EnhancedOptions& options = {});
/// Variant taking an explicit point set G (connected in the given order per
/// polyline); `side` returns +1 on the U1 (positive) side and -1 on the other.
ImplicitCurve enhanced_curve(const PolylineSet& g_lines, const std::function<int(Point2)>& side, double h,
                             const EnhancedOptions& options = {});

int enhanced_mesh_size(double h, double multiplier, int min_mesh = 8);

struct CurveDistance {
  double hausdorff = 0.0;
  double mean = 0.0;
  double clipped_hausdorff = 0.0;  // only points farther than `margin` from the domain boundary
  std::size_t n_points = 0;
};

CurveDistance curve_distance(const PolylineSet& a, const PolylineSet& b, double margin = 0.0);
/// Against an analytic curve: exact projection for A's vertices; the other
/// direction uses >= 1e4 curve samples plus the curve points nearest to A's
/// segment midpoints.
CurveDistance curve_distance(const PolylineSet& a, const AnalyticCurve& b, double margin = 0.0,
                             int samples = 10000);

/// Largest distance from any point to the analytic curve.
double max_distance(std::span<const Point2> points, const AnalyticCurve& curve);

}  // namespace cellrecon
