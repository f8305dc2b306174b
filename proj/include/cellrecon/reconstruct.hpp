#pragma once

#include <optional>
#include <vector>

#include "cellrecon/curve.hpp"
#include "cellrecon/grid.hpp"
#include "cellrecon/spline.hpp"

namespace cellrecon {

/// Per-side validity flags on the n x n grid (row-major, j as row).
struct CellValidity {
  int n = 0;
  std::vector<char> side1, side2;

  bool valid(int side, int i, int j) const {
    const auto& v = side == 1 ? side1 : side2;
    return v[static_cast<std::size_t>(j - 1) * n + (i - 1)] != 0;
  }
  int count(int side) const;
};

/**
 * A cell is valid for side 1 when S >= 0 on all of it and for side 2 when
 * S < 0 on all of it, decided by Bernstein bounds on the spline pieces over
 * the cell (subdivided a few times); anything undecided is non-valid.
 * With guard > 0 the test runs on the cell grown by guard * h on every side,
 * so cells merely grazed by a slightly misplaced curve are left non-valid.
 */
CellValidity classify_cells(const TensorSpline& s, int n, double guard = 0.0);

/// Cells (possibly ghost) whose averages Q_3 needs: the 7 x 7 neighbourhoods
/// of all cells not exclusively owned by the other side.  Returned as a mask
/// over the extended index range [1-pad, n+pad]^2.
std::vector<char> stencil_need(const CellValidity& validity, int side, int pad);

/// Fill every needed non-valid / ghost cell of one side by 1D cubic
/// extrapolation from the nearest run of 4 valid cells along an axis.
ExtendedCellGrid extend_side(const CellGrid& g, const std::vector<char>& valid, const std::vector<char>& need, int pad);

inline constexpr int kExtensionPad = 6;
/// Guard (in units of h) used by build_reconstruction when classifying.
inline constexpr double kClassifyGuard = 0.125;

enum class ReconMethod { Quasi, LeastSquares };

struct PiecewiseReconstruction {
  std::optional<ImplicitCurve> curve;  // none: single smooth piece
  ReconMethod method = ReconMethod::Quasi;
  std::optional<CellValidity> validity;
  ExtendedCellGrid side1, side2;
  TensorSpline spline1, spline2;
  double residual = 0.0;  // least-squares path only

  /// Side 1 on S >= 0 (and everywhere without a curve).
  int side_of(double x, double y) const;
};

PiecewiseReconstruction build_reconstruction(const CellGrid& g, const std::optional<ImplicitCurve>& curve);

double evaluate(const PiecewiseReconstruction& r, double x, double y);

struct LsOptions {
  double smoothing = 1e-6;  // second-difference coefficient penalty, relative to max diag of A^T A
  double lambda = 1e-12;    // ridge term, same scale
};

/// Least-squares bicubic fit of the cell averages, each side using the basis
/// functions whose support meets it; crossed cells integrate the basis over
/// cell ∩ side.  Basis functions that only graze a side are tied to their
/// neighbours by a small second-difference penalty.
PiecewiseReconstruction fit_cell_average_ls(const CellGrid& g, const std::optional<ImplicitCurve>& curve,
                                            double knot_spacing, const LsOptions& options = {});

/// Symmetric Hausdorff distance in R^3 between the graphs of f and r.
double graph_hausdorff(const PiecewiseReconstruction& r, const TestFunction& f, int m, int near_samples = 10000,
                       unsigned seed = 1);

struct ErrorSummary {
  double max_error = 0.0;
  std::size_t count = 0;
};

/// Max |f - r| over an m x m sample grid, restricted to points farther than
/// `min_dist` from the true curve (and, if given, `tube` from r's curve).
ErrorSummary farfield_error(const PiecewiseReconstruction& r, const TestFunction& f, int m, double min_dist,
                            double tube = 0.0);

/// Max |f - r| over points within `max_dist` of the true curve (but outside
/// `tube` around r's curve), sampled on an m x m grid.
ErrorSummary nearfield_error(const PiecewiseReconstruction& r, const TestFunction& f, int m, double max_dist,
                             double tube = 0.0);

}  // namespace cellrecon
