#include "cellrecon/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "cellrecon/error.hpp"

namespace cellrecon {

CellGrid::CellGrid(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "grid size must be positive");
  if (values_.size() != static_cast<std::size_t>(n) * n)
    throw Error(ErrorCode::InvalidArgument, "grid needs n*n values");
  for (double v : values_)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "grid values must be finite");
}

CellGrid CellGrid::filled(int n, double value) {
  return CellGrid(n, std::vector<double>(static_cast<std::size_t>(n) * n, value));
}

AggregateGrid::AggregateGrid(int n, std::vector<long double> values) : n_(n), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(n + 1) * (n + 1))
    throw Error(ErrorCode::InvalidArgument, "aggregate grid needs (n+1)^2 values");
}

ExtendedCellGrid::ExtendedCellGrid(int n, int pad) : n_(n), pad_(pad) {
  const std::size_t w = static_cast<std::size_t>(n + 2 * pad);
  values_.assign(w * w, 0.0);
  known_.assign(w * w, 0);
  provenance_.assign(w * w, FillProvenance{});
}

ExtendedCellGrid ExtendedCellGrid::from_grid(const CellGrid& g, int pad) {
  ExtendedCellGrid e(g.n(), pad);
  for (int j = 1; j <= g.n(); ++j)
    for (int i = 1; i <= g.n(); ++i) e.set(i, j, g(i, j), {FillProvenance::Source::Original, -1, 0, -1, 0});
  return e;
}

void ExtendedCellGrid::set(int i, int j, double v, FillProvenance p) {
  const auto k = index(i, j);
  values_[k] = v;
  known_[k] = 1;
  provenance_[k] = p;
}

void ExtendedCellGrid::clear(int i, int j) {
  const auto k = index(i, j);
  known_[k] = 0;
  provenance_[k] = FillProvenance{};
}

// ---------------------------------------------------------------------------
// Gauss-Legendre

const GaussRule& gauss_legendre(int order) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(order); it != cache.end()) return it->second;

  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int k = 0; k < order; ++k) {
    double x = std::cos(std::numbers::pi * (k + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int m = 2; m <= order; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) p0 = 1.0;
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[k] = x;
    rule.weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

// ---------------------------------------------------------------------------
// Catalog

std::string to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::OpenQuarterCircle: return "open-quarter-circle";
    case FunctionKind::ClosedCircle: return "closed-circle";
    case FunctionKind::Step: return "step";
    case FunctionKind::Smooth: return "smooth";
    case FunctionKind::Custom: return "custom";
  }
  return "custom";
}

std::optional<FunctionKind> parse_function_kind(const std::string& name) {
  for (auto k : {FunctionKind::OpenQuarterCircle, FunctionKind::ClosedCircle, FunctionKind::Step,
                 FunctionKind::Smooth, FunctionKind::Custom})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

namespace {

AnalyticCurve circle_curve(Point2 c, double r, double theta0, double theta1, bool closed) {
  AnalyticCurve curve;
  curve.closed = closed;
  curve.closest_point = [=](Point2 p) {
    double theta = std::atan2(p.y - c.y, p.x - c.x);
    if (!closed) {
      // clamp to the arc, choosing the nearer endpoint when outside it
      if (theta < theta0 || theta > theta1) {
        const Point2 a{c.x + r * std::cos(theta0), c.y + r * std::sin(theta0)};
        const Point2 b{c.x + r * std::cos(theta1), c.y + r * std::sin(theta1)};
        return distance(p, a) <= distance(p, b) ? a : b;
      }
    }
    return Point2{c.x + r * std::cos(theta), c.y + r * std::sin(theta)};
  };
  curve.sample = [=](int m) {
    Polyline line;
    line.closed = closed;
    const int count = std::max(m, 2);
    for (int k = 0; k < count; ++k) {
      const double t = closed ? static_cast<double>(k) / count : static_cast<double>(k) / (count - 1);
      const double theta = theta0 + t * (theta1 - theta0);
      line.points.push_back({c.x + r * std::cos(theta), c.y + r * std::sin(theta)});
    }
    return PolylineSet{line};
  };
  return curve;
}

double min_jump_along(const AnalyticCurve& curve, const ScalarField& f1, const ScalarField& f2) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& line : curve.sample(4096))
    for (const auto& p : line.points) best = std::min(best, std::abs(f1(p.x, p.y) - f2(p.x, p.y)));
  return best;
}

}  // namespace

TestFunction open_quarter_circle() {
  TestFunction f;
  f.kind = FunctionKind::OpenQuarterCircle;
  f.piece1 = [](double x, double y) { return x + y; };
  f.piece2 = [](double, double y) { return 1.0 + 0.5 * std::sin(3.0 * y); };
  f.level = [](double x, double y) { return x * x + y * y - 0.5; };
  f.curve = circle_curve({0.0, 0.0}, std::sqrt(0.5), 0.0, std::numbers::pi / 2, false);
  f.jump_bound = min_jump_along(*f.curve, f.piece1, f.piece2);
  f.second_derivative_bound = 4.5;
  return f;
}

TestFunction closed_circle(double inside_value, double outside_value) {
  TestFunction f;
  f.kind = FunctionKind::ClosedCircle;
  f.piece1 = [=](double, double) { return inside_value; };
  f.piece2 = [=](double, double) { return outside_value; };
  f.level = [](double x, double y) { return (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) - 0.1; };
  f.curve = circle_curve({0.5, 0.5}, std::sqrt(0.1), -std::numbers::pi, std::numbers::pi, true);
  f.jump_bound = std::abs(inside_value - outside_value);
  f.second_derivative_bound = 0.0;
  return f;
}

TestFunction step(double position, double left, double right) {
  TestFunction f;
  f.kind = FunctionKind::Step;
  f.piece1 = [=](double, double) { return left; };
  f.piece2 = [=](double, double) { return right; };
  f.level = [=](double x, double) { return x - position; };
  AnalyticCurve c;
  c.closest_point = [=](Point2 p) { return Point2{position, std::clamp(p.y, 0.0, 1.0)}; };
  c.sample = [=](int m) {
    Polyline line;
    const int count = std::max(m, 2);
    for (int k = 0; k < count; ++k) line.points.push_back({position, static_cast<double>(k) / (count - 1)});
    return PolylineSet{line};
  };
  f.curve = c;
  f.jump_bound = std::abs(right - left);
  f.second_derivative_bound = 0.0;
  return f;
}

TestFunction smooth() {
  TestFunction f;
  f.kind = FunctionKind::Smooth;
  f.piece1 = [](double x, double y) { return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); };
  f.piece2 = f.piece1;
  f.level = [](double, double) { return -1.0; };
  f.second_derivative_bound = 2.0 * std::numbers::pi * std::numbers::pi;
  return f;
}

TestFunction constant(double value) {
  TestFunction f;
  f.kind = FunctionKind::Custom;
  f.piece1 = [=](double, double) { return value; };
  f.piece2 = f.piece1;
  f.level = [](double, double) { return -1.0; };
  return f;
}

TestFunction graph_edge(ScalarField below, ScalarField above, std::function<double(double)> curve,
                        std::function<double(double)> curve_slope) {
  TestFunction f;
  f.kind = FunctionKind::Custom;
  f.piece1 = std::move(below);
  f.piece2 = std::move(above);
  f.level = [curve](double x, double y) { return y - curve(x); };
  AnalyticCurve c;
  c.closest_point = [curve, curve_slope](Point2 p) {
    // coarse scan then Newton on d/dt |(t, g(t)) - p|^2
    constexpr int kScan = 2000;
    double best_t = 0.0, best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kScan; ++k) {
      const double t = static_cast<double>(k) / kScan;
      const double d = distance(p, {t, curve(t)});
      if (d < best) best = d, best_t = t;
    }
    double lo = std::max(0.0, best_t - 1.0 / kScan), hi = std::min(1.0, best_t + 1.0 / kScan);
    auto phi = [&](double t) { return (t - p.x) + (curve(t) - p.y) * curve_slope(t); };
    if (phi(lo) < 0.0 && phi(hi) > 0.0) {
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) < 0.0 ? lo : hi) = mid;
      }
      best_t = 0.5 * (lo + hi);
    }
    return Point2{best_t, curve(best_t)};
  };
  c.sample = [curve](int m) {
    Polyline line;
    const int count = std::max(m, 2);
    for (int k = 0; k < count; ++k) {
      const double t = static_cast<double>(k) / (count - 1);
      line.points.push_back({t, curve(t)});
    }
    return PolylineSet{line};
  };
  f.curve = c;
  f.jump_bound = min_jump_along(*f.curve, f.piece1, f.piece2);
  return f;
}

TestFunction make_catalog(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::OpenQuarterCircle: return open_quarter_circle();
    case FunctionKind::ClosedCircle: return closed_circle();
    case FunctionKind::Step: return step();
    case FunctionKind::Smooth: return smooth();
    case FunctionKind::Custom: break;
  }
  throw Error(ErrorCode::InvalidArgument, "custom functions have no catalog entry");
}

// ---------------------------------------------------------------------------
// Discretization

namespace {


// Mean over the rectangle, normalised by the discrete weight sum in extended
// precision so that constants come out exact.
double gauss_mean(const ScalarField& f, double x0, double x1, double y0, double y1, const GaussRule& rule) {
  const double cx = 0.5 * (x0 + x1), rx = 0.5 * (x1 - x0);
  const double cy = 0.5 * (y0 + y1), ry = 0.5 * (y1 - y0);
  long double sum = 0.0L, wsum = 0.0L;
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    long double row = 0.0L;
    for (std::size_t b = 0; b < rule.nodes.size(); ++b)
      row += static_cast<long double>(rule.weights[b]) * f(cx + rx * rule.nodes[a], cy + ry * rule.nodes[b]);
    sum += rule.weights[a] * row;
    wsum += rule.weights[a];
  }
  return static_cast<double>(sum / (wsum * wsum));
}

// Integral over y in [y0,y1] of f(x, .) with the jump located by bracketing
// the level function along the vertical line.
double line_integral(const TestFunction& f, double x, double y0, double y1, const GaussRule& rule) {
  constexpr int kSamples = 24;
  std::vector<double> breaks{y0};
  double prev_y = y0;
  double prev_v = f.level(x, y0);
  for (int k = 1; k <= kSamples; ++k) {
    const double y = y0 + (y1 - y0) * k / kSamples;
    const double v = f.level(x, y);
    if ((prev_v < 0.0) != (v < 0.0)) {
      double lo = prev_y, hi = y;
      const bool lo_neg = prev_v < 0.0;
      for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((f.level(x, mid) < 0.0) == lo_neg ? lo : hi) = mid;
      }
      breaks.push_back(0.5 * (lo + hi));
    }
    prev_y = y;
    prev_v = v;
  }
  breaks.push_back(y1);

  double sum = 0.0;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s], b = breaks[s + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    const ScalarField& piece = f.in_piece1(x, mid) ? f.piece1 : f.piece2;
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double part = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) part += rule.weights[q] * piece(x, c + r * rule.nodes[q]);
    sum += part * r;
  }
  return sum;
}

double gauss_outer(const TestFunction& f, double a, double b, double y0, double y1, const GaussRule& rule) {
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q)
    sum += rule.weights[q] * line_integral(f, c + r * rule.nodes[q], y0, y1, rule);
  return sum * r;
}

double adaptive_outer(const TestFunction& f, double a, double b, double y0, double y1, const GaussRule& rule,
                      double whole, double tol, int depth, bool& converged) {
  const double m = 0.5 * (a + b);
  const double left = gauss_outer(f, a, m, y0, y1, rule);
  const double right = gauss_outer(f, m, b, y0, y1, rule);
  if (std::abs(left + right - whole) <= tol) return left + right;
  if (depth >= 30) {
    converged = false;
    return left + right;
  }
  return adaptive_outer(f, a, m, y0, y1, rule, left, tol, depth + 1, converged) +
         adaptive_outer(f, m, b, y0, y1, rule, right, tol, depth + 1, converged);
}

// x positions where the jump meets the horizontal line y: kinks of the
// outer integrand.
void edge_crossings(const TestFunction& f, double x0, double x1, double y, std::vector<double>& out) {
  constexpr int kSamples = 24;
  double prev_x = x0;
  bool prev = f.level(x0, y) < 0.0;
  for (int k = 1; k <= kSamples; ++k) {
    const double x = x0 + (x1 - x0) * k / kSamples;
    const bool cur = f.level(x, y) < 0.0;
    if (cur != prev) {
      double lo = prev_x, hi = x;
      for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((f.level(mid, y) < 0.0) == prev ? lo : hi) = mid;
      }
      out.push_back(0.5 * (lo + hi));
    }
    prev_x = x;
    prev = cur;
  }
}

bool possibly_crossed(const TestFunction& f, double x0, double x1, double y0, double y1) {
  if (f.curve) {
    const Point2 c{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
    const double half_diag = 0.5 * std::hypot(x1 - x0, y1 - y0);
    return f.curve->distance(c) <= half_diag * (1.0 + 1e-9);
  }
  constexpr int kProbe = 6;
  const bool first = f.in_piece1(x0, y0);
  for (int a = 0; a <= kProbe; ++a)
    for (int b = 0; b <= kProbe; ++b)
      if (f.in_piece1(x0 + (x1 - x0) * a / kProbe, y0 + (y1 - y0) * b / kProbe) != first) return true;
  return false;
}

}  // namespace

double cell_average(const TestFunction& f, double x0, double x1, double y0, double y1, int quad_order,
                    bool* converged) {
  const double area = (x1 - x0) * (y1 - y0);
  if (!possibly_crossed(f, x0, x1, y0, y1)) {
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const ScalarField& piece = f.in_piece1(cx, cy) ? f.piece1 : f.piece2;
    if (converged) *converged = true;
    return gauss_mean(piece, x0, x1, y0, y1, gauss_legendre(quad_order));
  }
  const GaussRule& rule = gauss_legendre(std::max(quad_order, 8));
  std::vector<double> cuts{x0};
  edge_crossings(f, x0, x1, y0, cuts);
  edge_crossings(f, x0, x1, y1, cuts);
  cuts.push_back(x1);
  std::sort(cuts.begin(), cuts.end());
  bool ok = true;
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (!(b > a)) continue;
    const double whole = gauss_outer(f, a, b, y0, y1, rule);
    const double scale = std::max(1.0, std::abs(whole) / ((b - a) * (y1 - y0)));
    integral += adaptive_outer(f, a, b, y0, y1, rule, whole, 1e-15 * area * scale, 0, ok);
  }
  if (converged) *converged = ok;
  return integral / area;
}

CellGrid discretize(const TestFunction& f, int n, int quad_order, DiscretizeStats* stats) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "discretize needs n >= 1");
  if (quad_order < 2) throw Error(ErrorCode::InvalidArgument, "quadrature order must be >= 2");
  const double h = 1.0 / n;
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  DiscretizeStats local;
  for (int j = 1; j <= n; ++j) {
    for (int i = 1; i <= n; ++i) {
      const double x0 = (i - 1) * h, x1 = i * h, y0 = (j - 1) * h, y1 = j * h;
      bool ok = true;
      if (possibly_crossed(f, x0, x1, y0, y1)) ++local.crossed_cells;
      values[static_cast<std::size_t>(j - 1) * n + (i - 1)] = cell_average(f, x0, x1, y0, y1, quad_order, &ok);
      if (!ok) ++local.unconverged;
    }
  }
  if (stats) *stats = local;
  return CellGrid(n, std::move(values));
}

// ---------------------------------------------------------------------------
// Primitive and differences

AggregateGrid aggregate(const CellGrid& g) {
  const int n = g.n();
  const long double h2 = 1.0L / (static_cast<long double>(n) * n);
  std::vector<long double> F(static_cast<std::size_t>(n + 1) * (n + 1), 0.0L);
  // column running sums with Neumaier compensation, then prefix over rows
  std::vector<long double> col(n + 1, 0.0L), comp(n + 1, 0.0L);
  for (int l = 1; l <= n; ++l) {
    for (int k = 1; k <= n; ++k) {
      const long double v = g(k, l);
      const long double t = col[k] + v;
      if (std::abs(col[k]) >= std::abs(v)) comp[k] += (col[k] - t) + v;
      else comp[k] += (v - t) + col[k];
      col[k] = t;
    }
    long double run = 0.0L, c = 0.0L;
    for (int k = 1; k <= n; ++k) {
      const long double v = col[k] + comp[k];
      const long double t = run + v;
      if (std::abs(run) >= std::abs(v)) c += (run - t) + v;
      else c += (v - t) + run;
      run = t;
      F[static_cast<std::size_t>(l) * (n + 1) + k] = (run + c) * h2;
    }
  }
  return AggregateGrid(n, std::move(F));
}

CellGrid difference(const AggregateGrid& F) {
  const int n = F.n();
  const long double inv_h2 = static_cast<long double>(n) * n;
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i)
      values[static_cast<std::size_t>(j - 1) * n + (i - 1)] =
          static_cast<double>((F(i, j) - F(i - 1, j) - F(i, j - 1) + F(i - 1, j - 1)) * inv_h2);
  return CellGrid(n, std::move(values));
}

}  // namespace cellrecon
