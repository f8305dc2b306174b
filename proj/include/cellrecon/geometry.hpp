#pragma once

#include <cmath>
#include <vector>

namespace cellrecon {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Closest point to p on the segment [a, b].
inline Point2 project_to_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  double t = dot(p - a, ab) / len2;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return a + t * ab;
}

struct Polyline {
  std::vector<Point2> points;
  bool closed = false;
};

using PolylineSet = std::vector<Polyline>;

/// Integer cell index (i along x, j along y), 1-based in the public API.
struct CellIndex {
  int i = 0;
  int j = 0;
  friend bool operator==(CellIndex, CellIndex) = default;
  friend auto operator<=>(CellIndex a, CellIndex b) {
    // row-major: j outer, i inner
    if (auto c = a.j <=> b.j; c != 0) return c;
    return a.i <=> b.i;
  }
};

}  // namespace cellrecon
