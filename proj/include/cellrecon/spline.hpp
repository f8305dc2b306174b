#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cellrecon/geometry.hpp"
#include "cellrecon/grid.hpp"

namespace cellrecon {

using Rational = boost::multiprecision::cpp_rational;

std::string to_string(const Rational& r);

/// Central factorial numbers of the first kind, exact.  i, j <= 64.
Rational central_factorial(int i, int j);

/// Cell-average quasi-interpolation weights c_{p,j}, j = -floor(p/2)..floor(p/2).
struct QuasiCoeffTable {
  int p = 0;
  std::vector<Rational> exact;  // index j + floor(p/2)
  std::vector<double> real;

  int radius() const { return p / 2; }
  const Rational& at(int j) const { return exact[static_cast<std::size_t>(j + radius())]; }
  double operator()(int j) const { return real[static_cast<std::size_t>(j + radius())]; }
};

QuasiCoeffTable quasi_coeffs(int p);

/// L_p applied to a (2r+1)^2 window (r = floor(p/2)) of cell averages,
/// stored row-major with the y offset as row.  NaN marks a missing cell.
double local_op_L(int p, std::span<const double> window);

/// Values of the p+1 uniform B-splines N_{m-p..m} at u = m + t, t in [0,1).
void bspline_values(int p, double t, std::span<double> out);
/// Same plus first derivatives with respect to u.
void bspline_values_and_derivatives(int p, double t, std::span<double> values, std::span<double> derivs);

/**
 * Tensor-product spline with uniform knots:
 *   S(x,y) = sum_{k,l} coeff(k,l) B_p((x - origin)/d - k) B_p((y - origin)/d - l)
 * where B_p is the centred cardinal B-spline (support [-(p+1)/2,(p+1)/2]),
 * so basis (k,l) is centred at (origin + k d, origin + l d).  Coefficients
 * exist for k, l in [kmin, kmin + count).  Terms whose coefficient is
 * outside that range contribute nothing; evaluation outside [0,1]^2 is
 * allowed.
 */
class TensorSpline {
 public:
  TensorSpline() = default;
  TensorSpline(int degree, double knot_spacing, double origin, int kmin, int count, std::vector<double> coeff);

  int degree() const noexcept { return p_; }
  double knot_spacing() const noexcept { return d_; }
  double origin() const noexcept { return origin_; }
  int kmin() const noexcept { return kmin_; }
  int count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  double coeff(int k, int l) const {
    return coeff_[static_cast<std::size_t>(l - kmin_) * count_ + static_cast<std::size_t>(k - kmin_)];
  }
  bool has_coeff(int k, int l) const noexcept {
    return k >= kmin_ && k < kmin_ + count_ && l >= kmin_ && l < kmin_ + count_;
  }
  std::span<const double> coefficients() const noexcept { return coeff_; }

  double operator()(double x, double y) const;
  double operator()(Point2 p) const { return (*this)(p.x, p.y); }
  /// Value and gradient.
  double evaluate(double x, double y, double* dx, double* dy) const;

  /// Sum of the basis functions that have a coefficient, at (x, y).
  double basis_sum(double x, double y) const;

  /// Positions of knot lines along one axis (same on both).
  double knot_position(int knot) const noexcept { return origin_ + (knot - 0.5 * (p_ + 1)) * d_; }

  TensorSpline negated() const;

  /// 1D basis values at `coord` (degree+1 entries); returns the index of the first one.
  int axis_values(double coord, std::span<double> out) const;

 private:
  int p_ = 3;
  double d_ = 1.0;
  double origin_ = 0.0;
  int kmin_ = 0;
  int count_ = 0;
  std::vector<double> coeff_;
};

/**
 * Q_p from cell averages: degree-p spline with knot spacing h whose
 * coefficient at cell index k (centred on the cell centre (k-1/2)h) is
 * L_{p+1} of the window around cell k.  Coefficients are produced for every
 * basis function touching [0,1]^2; `required` (optional) restricts which
 * ones must have a complete window, the rest become NaN when incomplete.
 */
TensorSpline quasi_interpolant(const ExtendedCellGrid& g, int p,
                               const std::vector<char>* required = nullptr);

struct Sample {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

struct LeastSquaresFit {
  TensorSpline spline;
  double residual = 0.0;   // ||S(x_k) - v_k||_2
  double condition = 0.0;  // estimated from the pivoted QR
};

/// Least-squares tensor spline with basis centres k*d covering [0,1]^2.
LeastSquaresFit fit_least_squares(std::span<const Sample> samples, int degree, double knot_spacing,
                                  double lambda = 1e-10);

/**
 * Bicubic point-value quasi-interpolant on an m x m mesh over [0,1]^2
 * (spacing d = 1/(m-1), values row-major with y as row).  Coefficient stencil
 * per axis is (-1, 8, -1)/6, exact for cubics; two ghost layers are filled by
 * cubic extrapolation so the boundary keeps the same exactness.
 */
TensorSpline quasi_fit_on_mesh(std::span<const double> mesh_values, int m);

struct ContourOptions {
  int resolution = 256;           // samples per axis, >= 64
  double max_segment = 0.0;       // 0 disables refinement
  double root_tolerance = 1e-12;
};

/// Marching-squares zero level set with bisection roots on grid edges and
/// optional refinement that projects inserted points onto S = 0.
PolylineSet zero_level_curve(const TensorSpline& s, const ContourOptions& options = {});

}  // namespace cellrecon
