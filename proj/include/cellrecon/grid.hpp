#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellrecon/geometry.hpp"

namespace cellrecon {

/**
 * N x N cell averages on [0,1]^2.
 *
 * Cell (i,j), 1-based, is [(i-1)h, ih] x [(j-1)h, jh]; i runs along x and
 * j along y.  Storage is row-major with j as the row index, so entry
 * (i,j) lives at values()[(j-1)*n + (i-1)].
 */
class CellGrid {
 public:
  CellGrid() = default;
  CellGrid(int n, std::vector<double> values);

  static CellGrid filled(int n, double value);

  int n() const noexcept { return n_; }
  double h() const noexcept { return 1.0 / n_; }

  double operator()(int i, int j) const { return values_[index(i, j)]; }
  std::span<const double> values() const noexcept { return values_; }

  bool contains(int i, int j) const noexcept { return i >= 1 && i <= n_ && j >= 1 && j <= n_; }

  /// Center p_{i,j} = ((i-1/2)h, (j-1/2)h).
  Point2 center(int i, int j) const noexcept { return {(i - 0.5) * h(), (j - 0.5) * h()}; }

 private:
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j - 1) * n_ + static_cast<std::size_t>(i - 1);
  }

  int n_ = 0;
  std::vector<double> values_;
};

/// Point values F_{k,l}, 0 <= k,l <= n, of the 2D primitive.  Held in
/// extended precision: the difference operator divides by h^2 and would
/// otherwise amplify double rounding of F past 1e-12 at moderate n.
class AggregateGrid {
 public:
  AggregateGrid(int n, std::vector<long double> values);

  int n() const noexcept { return n_; }
  double h() const noexcept { return 1.0 / n_; }
  long double operator()(int k, int l) const {
    return values_[static_cast<std::size_t>(l) * (n_ + 1) + static_cast<std::size_t>(k)];
  }

 private:
  int n_;
  std::vector<long double> values_;
};

/// How an out-of-side or out-of-domain cell received its value.
struct FillProvenance {
  enum class Source { Original, Extrapolated, Missing };
  Source source = Source::Missing;
  int direction = -1;  // 0:+x 1:-x 2:+y 3:-y
  int run_start = 0;   // offset of first source cell along the direction
  int degree = -1;     // polynomial degree used (3 = cubic)
  int pass = 0;        // 0 = from original valid cells, >0 = transitive
};

/**
 * Cell grid padded by `pad` ghost layers on every side.  Indices run from
 * 1-pad to n+pad.  Each entry is either known (original or extrapolated) or
 * missing.
 */
class ExtendedCellGrid {
 public:
  ExtendedCellGrid() = default;
  ExtendedCellGrid(int n, int pad);

  /// Wraps a grid with every original cell known and all ghosts missing.
  static ExtendedCellGrid from_grid(const CellGrid& g, int pad);

  int n() const noexcept { return n_; }
  int pad() const noexcept { return pad_; }
  double h() const noexcept { return 1.0 / n_; }
  int lo() const noexcept { return 1 - pad_; }
  int hi() const noexcept { return n_ + pad_; }
  bool in_range(int i, int j) const noexcept { return i >= lo() && i <= hi() && j >= lo() && j <= hi(); }

  bool known(int i, int j) const { return in_range(i, j) && known_[index(i, j)]; }
  double value(int i, int j) const { return values_[index(i, j)]; }
  const FillProvenance& provenance(int i, int j) const { return provenance_[index(i, j)]; }

  void set(int i, int j, double v, FillProvenance p);
  void clear(int i, int j);

 private:
  std::size_t index(int i, int j) const noexcept {
    const int w = n_ + 2 * pad_;
    return static_cast<std::size_t>(j - lo()) * w + static_cast<std::size_t>(i - lo());
  }

  int n_ = 0;
  int pad_ = 0;
  std::vector<double> values_;
  std::vector<char> known_;
  std::vector<FillProvenance> provenance_;
};

/// Exact description of a separating curve used for error measurement.
struct AnalyticCurve {
  std::function<Point2(Point2)> closest_point;
  std::function<PolylineSet(int)> sample;  // sample(m): >= m points in total
  bool closed = false;

  double distance(Point2 p) const { return cellrecon::distance(p, closest_point(p)); }
};

enum class FunctionKind { OpenQuarterCircle, ClosedCircle, Step, Smooth, Custom };

std::string to_string(FunctionKind kind);
std::optional<FunctionKind> parse_function_kind(const std::string& name);

using ScalarField = std::function<double(double, double)>;

/**
 * Piecewise smooth test function: piece1 on Omega_1 = {level < 0}, piece2
 * elsewhere.  Both pieces are defined on all of R^2 (they are the smooth
 * extensions).  A function without a jump has no curve and level < 0
 * everywhere.
 */
struct TestFunction {
  FunctionKind kind = FunctionKind::Custom;
  ScalarField piece1;
  ScalarField piece2;
  ScalarField level;
  std::optional<AnalyticCurve> curve;
  double jump_bound = 0.0;        // delta: min |f1 - f2| along the curve
  double second_derivative_bound = 0.0;  // M = max(|f_xx| + |f_yy|) over both pieces

  bool in_piece1(double x, double y) const { return level(x, y) < 0.0; }
  double operator()(double x, double y) const { return in_piece1(x, y) ? piece1(x, y) : piece2(x, y); }
  bool has_curve() const { return curve.has_value(); }
};

/// x+y inside x^2+y^2<0.5, 1+0.5 sin(3y) outside.
TestFunction open_quarter_circle();
/// Circle (x-0.5)^2+(y-0.5)^2 = 0.1; inside_value on the disc, outside_value elsewhere.
TestFunction closed_circle(double inside_value = 1.0, double outside_value = 0.0);
/// Vertical step: left for x < position, right otherwise.
TestFunction step(double position = 0.5, double left = 0.0, double right = 1.0);
/// sin(pi x) sin(pi y), no jump.
TestFunction smooth();
/// Two smooth pieces separated by the graph y = curve(x) (piece1 below).
TestFunction graph_edge(ScalarField below, ScalarField above, std::function<double(double)> curve,
                        std::function<double(double)> curve_slope);
/// Constant function.
TestFunction constant(double value);
TestFunction make_catalog(FunctionKind kind);

struct DiscretizeStats {
  int crossed_cells = 0;
  int unconverged = 0;  // adaptive integrations that hit the depth limit
};

CellGrid discretize(const TestFunction& f, int n, int quad_order = 6, DiscretizeStats* stats = nullptr);

/// Average of f over the rectangle [x0,x1]x[y0,y1], resolving the jump.
double cell_average(const TestFunction& f, double x0, double x1, double y0, double y1, int quad_order,
                    bool* converged = nullptr);

AggregateGrid aggregate(const CellGrid& g);
CellGrid difference(const AggregateGrid& F);

/// Gauss-Legendre nodes/weights on [-1,1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int order);

}  // namespace cellrecon
