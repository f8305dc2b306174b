#include <cmath>
#include <unordered_map>

#include "cellrecon/error.hpp"
#include "cellrecon/spline.hpp"

namespace cellrecon {

namespace {

Point2 edge_root(const TensorSpline& s, Point2 a, double va, Point2 b, double vb, double tol) {
  if (va == 0.0) return a;
  if (vb == 0.0) return b;
  Point2 lo = a, hi = b;
  const bool lo_pos = va >= 0.0;
  Point2 mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = s(mid);
    if (std::abs(v) <= tol) break;
    if ((v >= 0.0) == lo_pos) lo = mid;
    else hi = mid;
    if (distance(lo, hi) < 1e-17) break;
  }
  return mid;
}

Point2 project_to_zero(const TensorSpline& s, Point2 start, double max_move, double tol) {
  Point2 p = start;
  for (int it = 0; it < 30; ++it) {
    double gx = 0.0, gy = 0.0;
    const double v = s.evaluate(p.x, p.y, &gx, &gy);
    if (std::abs(v) <= tol) return p;
    const double g2 = gx * gx + gy * gy;
    if (g2 == 0.0) return start;
    p = {p.x - v * gx / g2, p.y - v * gy / g2};
    if (distance(p, start) > max_move) return start;
  }
  return std::abs(s(p)) < std::abs(s(start)) ? p : start;
}

}  // namespace

PolylineSet zero_level_curve(const TensorSpline& s, const ContourOptions& options) {
  const int m = options.resolution;
  if (m < 64) throw Error(ErrorCode::InvalidArgument, "contour resolution must be >= 64");
  const double step = 1.0 / (m - 1);
  std::vector<double> v(static_cast<std::size_t>(m) * m);
  auto val = [&](int a, int b) { return v[static_cast<std::size_t>(b) * m + a]; };
  auto pt = [&](int a, int b) { return Point2{a * step, b * step}; };
  bool has_pos = false, has_neg = false;
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      const double x = s(pt(a, b));
      v[static_cast<std::size_t>(b) * m + a] = x;
      (x >= 0.0 ? has_pos : has_neg) = true;
    }
  if (!has_pos || !has_neg) throw Error(ErrorCode::EmptyContour, "spline has constant sign on the sample grid");

  // vertices live on grid edges; horizontal edge (a,b)-(a+1,b) and vertical
  // edge (a,b)-(a,b+1) get distinct keys
  std::vector<Point2> vertices;
  std::vector<std::vector<int>> adjacency;
  std::unordered_map<long long, int> edge_vertex;
  auto vertex_on = [&](int a0, int b0, int a1, int b1) {
    const bool horizontal = b0 == b1;
    const long long key = (static_cast<long long>(b0) * m + a0) * 2 + (horizontal ? 0 : 1);
    if (auto it = edge_vertex.find(key); it != edge_vertex.end()) return it->second;
    const Point2 p = edge_root(s, pt(a0, b0), val(a0, b0), pt(a1, b1), val(a1, b1), options.root_tolerance);
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(p);
    adjacency.emplace_back();
    edge_vertex.emplace(key, id);
    return id;
  };
  auto connect = [&](int u, int w) {
    if (u == w) return;
    adjacency[u].push_back(w);
    adjacency[w].push_back(u);
  };

  for (int b = 0; b + 1 < m; ++b)
    for (int a = 0; a + 1 < m; ++a) {
      const bool p0 = val(a, b) >= 0.0, p1 = val(a + 1, b) >= 0.0;
      const bool p2 = val(a + 1, b + 1) >= 0.0, p3 = val(a, b + 1) >= 0.0;
      const int code = (p0 ? 1 : 0) | (p1 ? 2 : 0) | (p2 ? 4 : 0) | (p3 ? 8 : 0);
      if (code == 0 || code == 15) continue;
      auto e0 = [&] { return vertex_on(a, b, a + 1, b); };          // bottom
      auto e1 = [&] { return vertex_on(a + 1, b, a + 1, b + 1); };  // right
      auto e2 = [&] { return vertex_on(a, b + 1, a + 1, b + 1); };  // top
      auto e3 = [&] { return vertex_on(a, b, a, b + 1); };          // left
      if (code == 5 || code == 10) {
        // saddle: decide by the value at the square centre
        const bool centre = s(pt(a, b) + Point2{0.5 * step, 0.5 * step}) >= 0.0;
        if (centre == p0) {
          connect(e0(), e1());
          connect(e2(), e3());
        } else {
          connect(e3(), e0());
          connect(e1(), e2());
        }
        continue;
      }
      std::vector<int> crossing;
      if (p0 != p1) crossing.push_back(e0());
      if (p1 != p2) crossing.push_back(e1());
      if (p3 != p2) crossing.push_back(e2());
      if (p0 != p3) crossing.push_back(e3());
      if (crossing.size() == 2) connect(crossing[0], crossing[1]);
    }

  PolylineSet result;
  std::vector<char> visited(vertices.size(), 0);
  auto walk = [&](int start, bool closed) {
    Polyline line;
    line.closed = closed;
    int prev = -1, cur = start;
    while (cur >= 0 && !visited[cur]) {
      visited[cur] = 1;
      line.points.push_back(vertices[cur]);
      int next = -1;
      for (int w : adjacency[cur])
        if (w != prev && !visited[w]) {
          next = w;
          break;
        }
      prev = cur;
      cur = next;
    }
    if (line.points.size() >= 2) result.push_back(std::move(line));
  };
  for (std::size_t k = 0; k < vertices.size(); ++k)
    if (!visited[k] && adjacency[k].size() <= 1) walk(static_cast<int>(k), false);
  for (std::size_t k = 0; k < vertices.size(); ++k)
    if (!visited[k]) walk(static_cast<int>(k), true);

  if (options.max_segment > 0.0) {
    for (auto& line : result) {
      std::vector<Point2> refined;
      const std::size_t count = line.points.size();
      const std::size_t segments = line.closed ? count : count - 1;
      for (std::size_t k = 0; k < segments; ++k) {
        const Point2 a = line.points[k], b = line.points[(k + 1) % count];
        refined.push_back(a);
        const double len = distance(a, b);
        const int pieces = static_cast<int>(std::ceil(len / options.max_segment));
        for (int q = 1; q < pieces; ++q) {
          const Point2 guess = a + (static_cast<double>(q) / pieces) * (b - a);
          refined.push_back(project_to_zero(s, guess, std::max(len, step), options.root_tolerance));
        }
      }
      if (!line.closed) refined.push_back(line.points.back());
      line.points = std::move(refined);
    }
  }
  return result;
}

}  // namespace cellrecon
