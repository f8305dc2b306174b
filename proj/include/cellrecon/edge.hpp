#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cellrecon/geometry.hpp"
#include "cellrecon/grid.hpp"
#include "cellrecon/signature.hpp"

namespace cellrecon {

enum class Orientation { YofX, XofY };

std::string to_string(Orientation o);

/// Affine map global = M * local + t.  M is a signed permutation matrix.
struct Frame {
  std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
  std::array<double, 2> t{0.0, 0.0};

  Point2 to_global(Point2 local) const {
    return {m[0] * local.x + m[1] * local.y + t[0], m[2] * local.x + m[3] * local.y + t[1]};
  }
  Point2 to_local(Point2 global) const {
    const double gx = global.x - t[0], gy = global.y - t[1];
    // M orthogonal: inverse is the transpose
    return {m[0] * gx + m[2] * gy, m[1] * gx + m[3] * gy};
  }
};

/// Linear function alpha*x + beta*y + gamma in the local frame.
struct LinearPiece {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  double operator()(double x, double y) const { return alpha * x + beta * y + gamma; }
};

/**
 * 3 x 8 block of cells seen in the local frame where the window is
 * [h,4h] x [h,9h]: local cells i in {2,3,4}, j in {2..9}.  Rows 2-3 are on
 * the U1 side and rows 8-9 on the U2 side.
 */
struct EdgeWindow {
  CellIndex anchor;
  Orientation orientation = Orientation::YofX;
  bool reflected = false;  // local y runs against the global axis
  Frame frame;
  double h = 0.0;
  std::array<double, 24> cells{};  // (i-2) + 3*(j-2)
  std::array<CellIndex, 24> global{};
  double x_lo = 0.0;  // local x-range of the arc (multiples of h)
  double x_hi = 0.0;

  double cell(int i, int j) const { return cells[static_cast<std::size_t>((i - 2) + 3 * (j - 2))]; }
  CellIndex global_cell(int i, int j) const { return global[static_cast<std::size_t>((i - 2) + 3 * (j - 2))]; }
};

/// q(x) = a x^2 + b x + c h in the local frame (physical units).
struct QuadraticArc {
  CellIndex anchor;
  Orientation orientation = Orientation::YofX;
  Frame frame;
  double h = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  LinearPiece lower, upper;
  double residual = 0.0;
  int newton_iters = 0;
  bool valid = false;
  std::string reason;

  double q(double x) const { return a * x * x + b * x + c * h; }
  /// Global points of the arc sampled uniformly in local x.
  std::vector<Point2> sample(int count) const;
  /// True when p lies on the U1 side (below the arc in the local frame).
  bool below(Point2 global_point) const;
};

/**
 * Column-sum system in the scaled unknowns v = (A, b, c) with
 * q(x)/h = A X^2 + b X + c, X = x/h (so A = a h).  Q_i is the sum of model
 * cell averages over rows 4..7 of local column i = 2,3,4; F the same sums
 * of the data.  In these unknowns det J = 2 (c2 - c1)^3 for constant pieces.
 */
struct QuadraticSystem {
  double h = 0.0;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;  // L1 - L2 with alpha, beta scaled by h
  std::array<double, 3> upper_term{};           // 4 * L2 at column centres
  std::array<double, 3> target{};               // F
  double hessian_bound = 0.0;

  std::array<double, 3> value(const std::array<double, 3>& v) const;
  std::array<double, 9> jacobian(const std::array<double, 3>& v) const;  // row-major
  double jacobian_det(const std::array<double, 3>& v) const;
};

struct NewtonResult {
  std::array<double, 3> v{};
  int iterations = 0;
  double residual = 0.0;
};

struct WindowOptions {
  int max_shift = 2;  // vertical placements tried around the predicted one
};

EdgeWindow build_window(const CellPartition& part, const CellGrid& g, CellIndex anchor,
                        const WindowOptions& options = {});

std::pair<LinearPiece, LinearPiece> fit_linear_pieces(const EdgeWindow& w);

QuadraticSystem assemble_quadratic_system(const EdgeWindow& w, const LinearPiece& lower, const LinearPiece& upper);
/// Same system built directly from the three column sums (used by oracles).
QuadraticSystem assemble_quadratic_system(double h, const LinearPiece& lower, const LinearPiece& upper,
                                          const std::array<double, 3>& column_sums);

NewtonResult newton_solve(const QuadraticSystem& system, std::array<double, 3> init, double tol = 1e-12,
                          int max_iters = 25);

/// Line fit through the U0 centres inside the window: (A = 0, b, c) in scaled units.
std::array<double, 3> initial_guess(const CellPartition& part, const EdgeWindow& w);

/// Full local solve for one window; the arc is flagged invalid (with a
/// reason) rather than throwing when the model does not fit.
QuadraticArc solve_window(const CellPartition& part, const EdgeWindow& w);

struct ChainOptions {
  int stride = 1;
  int samples_per_arc = 16;
};

struct ArcChain {
  std::vector<QuadraticArc> arcs;  // surviving arcs, ordered by anchor
  std::vector<std::string> skipped;
  std::vector<Point2> points;      // G
};

ArcChain chain_arcs(const CellPartition& part, const CellGrid& g, const ChainOptions& options = {});

}  // namespace cellrecon
