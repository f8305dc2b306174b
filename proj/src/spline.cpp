#include "cellrecon/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Dense>

#include "cellrecon/error.hpp"

namespace cellrecon {

std::string to_string(const Rational& r) {
  const auto num = boost::multiprecision::numerator(r);
  const auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

// ---------------------------------------------------------------------------
// Central factorial numbers and c_{p,j}

Rational central_factorial(int i, int j) {
  if (i < 0 || j < 0 || i > 64 || j > 64) throw Error(ErrorCode::InvalidArgument, "central factorial index out of range");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, Rational> memo;
  {
    std::lock_guard lock(mutex);
    if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
  }
  Rational t;
  if (j > i) {
    t = 0;
  } else if (j == i) {
    t = 1;
  } else if (j == 0) {
    t = 0;  // t(i,0) = 0 for i >= 1
  } else if (j == 1) {
    // i >= 2: prod_{l=1}^{i-1} (i/2 - l)
    t = 1;
    for (int l = 1; l <= i - 1; ++l) t *= Rational(i, 2) - l;
  } else {
    const Rational half(i - 2, 2);
    t = central_factorial(i - 2, j - 2) - half * half * central_factorial(i - 2, j);
  }
  std::lock_guard lock(mutex);
  memo.emplace(std::make_pair(i, j), t);
  return t;
}

namespace {

Rational binomial(int n, int k) {
  Rational r = 1;
  for (int a = 1; a <= k; ++a) r = r * (n - k + a) / a;
  return r;
}

Rational factorial(int n) {
  Rational r = 1;
  for (int a = 2; a <= n; ++a) r *= a;
  return r;
}

}  // namespace

QuasiCoeffTable quasi_coeffs(int p) {
  if (p < 1 || p > 5) throw Error(ErrorCode::InvalidArgument, "quasi-interpolation weights are tabulated for p = 1..5");
  QuasiCoeffTable table;
  table.p = p;
  const int r = p / 2;
  const int ceil_half = (p + 2) / 2;  // ceil((p+1)/2)
  table.exact.assign(2 * r + 1, Rational(0));
  // l runs to floor(p/2); floor((p+1)/2) - 1 drops the last term for even p
  for (int l = 0; l <= r; ++l) {
    const Rational outer = central_factorial(2 * l + p + 1, p + 1) / binomial(2 * l + p + 1, p + 1);
    for (int i = 0; i <= 2 * l; ++i) {
      // Kronecker delta picks j = l - i + ceil((p+1)/2) - 1 - floor(p/2)
      const int j = l - i + ceil_half - 1 - r;
      if (j < -r || j > r) continue;
      const Rational inner = Rational(i % 2 == 0 ? 1 : -1) / (factorial(i) * factorial(2 * l - i));
      table.exact[static_cast<std::size_t>(j + r)] += outer * inner;
    }
  }
  for (const auto& c : table.exact) table.real.push_back(static_cast<double>(c));
  return table;
}

namespace {

const QuasiCoeffTable& cached_coeffs(int p) {
  static std::mutex mutex;
  static std::map<int, QuasiCoeffTable> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(p); it != cache.end()) return it->second;
  return cache.emplace(p, quasi_coeffs(p)).first->second;
}

}  // namespace

double local_op_L(int p, std::span<const double> window) {
  const auto& c = cached_coeffs(p);
  const int r = c.radius();
  const int w = 2 * r + 1;
  if (window.size() != static_cast<std::size_t>(w * w))
    throw Error(ErrorCode::InvalidArgument, "window must hold (2 floor(p/2) + 1)^2 values");
  double sum = 0.0;
  for (int b = -r; b <= r; ++b) {
    double row = 0.0;
    for (int a = -r; a <= r; ++a) {
      const double v = window[static_cast<std::size_t>((b + r) * w + (a + r))];
      if (std::isnan(v)) throw Error(ErrorCode::IncompleteWindow, "missing cell in L_p window");
      row += c(a) * v;
    }
    sum += c(b) * row;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// B-spline basis

void bspline_values(int p, double t, std::span<double> out) {
  std::array<double, 16> left{}, right{};
  out[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t + j - 1;
    right[j] = j - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / j;
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

void bspline_values_and_derivatives(int p, double t, std::span<double> values, std::span<double> derivs) {
  std::array<double, 16> lower{};
  if (p == 0) {
    values[0] = 1.0;
    derivs[0] = 0.0;
    return;
  }
  bspline_values(p - 1, t, std::span<double>(lower.data(), p));
  bspline_values(p, t, values);
  for (int k = 0; k <= p; ++k) {
    const double a = k >= 1 ? lower[k - 1] : 0.0;
    const double b = k <= p - 1 ? lower[k] : 0.0;
    derivs[k] = a - b;
  }
}

TensorSpline::TensorSpline(int degree, double knot_spacing, double origin, int kmin, int count,
                           std::vector<double> coeff)
    : p_(degree), d_(knot_spacing), origin_(origin), kmin_(kmin), count_(count), coeff_(std::move(coeff)) {
  if (degree < 0 || degree > 8) throw Error(ErrorCode::InvalidArgument, "spline degree out of range");
  if (!(knot_spacing > 0.0)) throw Error(ErrorCode::InvalidArgument, "knot spacing must be positive");
  if (coeff_.size() != static_cast<std::size_t>(count) * count)
    throw Error(ErrorCode::InvalidArgument, "coefficient array must be count x count");
}

namespace {

struct AxisBasis {
  int first = 0;  // index of the first nonzero basis
  std::array<double, 16> value{};
  std::array<double, 16> deriv{};
};

AxisBasis axis_basis(double coord, double origin, double d, int p, bool with_derivs) {
  const double u = (coord - origin) / d + 0.5 * (p + 1);
  const double m = std::floor(u);
  AxisBasis b;
  b.first = static_cast<int>(m) - p;
  const double t = u - m;
  if (with_derivs) {
    bspline_values_and_derivatives(p, t, std::span<double>(b.value.data(), p + 1),
                                   std::span<double>(b.deriv.data(), p + 1));
    for (int k = 0; k <= p; ++k) b.deriv[k] /= d;
  } else {
    bspline_values(p, t, std::span<double>(b.value.data(), p + 1));
  }
  return b;
}

}  // namespace

int TensorSpline::axis_values(double coord, std::span<double> out) const {
  const AxisBasis b = axis_basis(coord, origin_, d_, p_, false);
  std::copy_n(b.value.begin(), p_ + 1, out.begin());
  return b.first;
}

double TensorSpline::operator()(double x, double y) const { return evaluate(x, y, nullptr, nullptr); }

double TensorSpline::evaluate(double x, double y, double* dx, double* dy) const {
  const bool grad = dx != nullptr || dy != nullptr;
  const AxisBasis bx = axis_basis(x, origin_, d_, p_, grad);
  const AxisBasis by = axis_basis(y, origin_, d_, p_, grad);
  double value = 0.0, gx = 0.0, gy = 0.0;
  for (int b = 0; b <= p_; ++b) {
    const int l = by.first + b;
    if (l < kmin_ || l >= kmin_ + count_) continue;
    for (int a = 0; a <= p_; ++a) {
      const int k = bx.first + a;
      if (k < kmin_ || k >= kmin_ + count_) continue;
      const double w = bx.value[a] * by.value[b];
      const bool touches = w != 0.0 || (grad && (bx.deriv[a] != 0.0 || by.deriv[b] != 0.0));
      if (!touches) continue;
      const double c = coeff(k, l);
      value += c * w;
      if (grad) {
        gx += c * bx.deriv[a] * by.value[b];
        gy += c * bx.value[a] * by.deriv[b];
      }
    }
  }
  if (dx) *dx = gx;
  if (dy) *dy = gy;
  return value;
}

double TensorSpline::basis_sum(double x, double y) const {
  const AxisBasis bx = axis_basis(x, origin_, d_, p_, false);
  const AxisBasis by = axis_basis(y, origin_, d_, p_, false);
  double sum = 0.0;
  for (int b = 0; b <= p_; ++b)
    for (int a = 0; a <= p_; ++a)
      if (has_coeff(bx.first + a, by.first + b)) sum += bx.value[a] * by.value[b];
  return sum;
}

TensorSpline TensorSpline::negated() const {
  std::vector<double> c(coeff_.size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = -coeff_[k];
  return TensorSpline(p_, d_, origin_, kmin_, count_, std::move(c));
}

// ---------------------------------------------------------------------------
// Quasi-interpolation from cell averages

TensorSpline quasi_interpolant(const ExtendedCellGrid& g, int p, const std::vector<char>* required) {
  if (p < 0 || p > 4) throw Error(ErrorCode::InvalidArgument, "Q_p needs L_{p+1} weights, so p <= 4");
  const auto& c = cached_coeffs(p + 1);
  const int r = c.radius();
  const int n = g.n();
  const double h = g.h();
  const int kmin = static_cast<int>(std::floor(0.5 - 0.5 * (p + 1))) + 1;
  const int kmax = static_cast<int>(std::ceil(n + 0.5 + 0.5 * (p + 1))) - 1;
  const int count = kmax - kmin + 1;
  if (required && required->size() != static_cast<std::size_t>(count) * count)
    throw Error(ErrorCode::InvalidArgument, "required mask has the wrong size");

  std::vector<double> coeff(static_cast<std::size_t>(count) * count, std::numeric_limits<double>::quiet_NaN());
  for (int l = kmin; l <= kmax; ++l)
    for (int k = kmin; k <= kmax; ++k) {
      const std::size_t slot = static_cast<std::size_t>(l - kmin) * count + (k - kmin);
      bool complete = true;
      double sum = 0.0;
      for (int b = -r; b <= r && complete; ++b) {
        double row = 0.0;
        for (int a = -r; a <= r; ++a) {
          if (!g.known(k + a, l + b)) {
            complete = false;
            break;
          }
          row += c(a) * g.value(k + a, l + b);
        }
        sum += c(b) * row;
      }
      const bool needed = required ? (*required)[slot] != 0 : true;
      if (complete) {
        coeff[slot] = sum;
      } else if (needed) {
        throw Error(ErrorCode::IncompleteWindow,
                    "cell-average window around (" + std::to_string(k) + "," + std::to_string(l) + ") is incomplete");
      }
    }
  return TensorSpline(p, h, -0.5 * h, kmin, count, std::move(coeff));
}

// ---------------------------------------------------------------------------
// Least squares

LeastSquaresFit fit_least_squares(std::span<const Sample> samples, int degree, double knot_spacing, double lambda) {
  if (!(knot_spacing > 0.0)) throw Error(ErrorCode::InvalidArgument, "knot spacing must be positive");
  if (lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  const double half = 0.5 * (degree + 1);
  const int kmin = static_cast<int>(std::floor(-half)) + 1;
  const int kmax = static_cast<int>(std::ceil(1.0 / knot_spacing + half)) - 1;
  const int count = kmax - kmin + 1;
  const int unknowns = count * count;
  const int rows = static_cast<int>(samples.size());

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows + unknowns, unknowns);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + unknowns);
  for (int s = 0; s < rows; ++s) {
    const auto bx = axis_basis(samples[s].x, 0.0, knot_spacing, degree, false);
    const auto by = axis_basis(samples[s].y, 0.0, knot_spacing, degree, false);
    for (int b = 0; b <= degree; ++b) {
      const int l = by.first + b;
      if (l < kmin || l > kmax) continue;
      for (int a = 0; a <= degree; ++a) {
        const int k = bx.first + a;
        if (k < kmin || k > kmax) continue;
        A(s, (l - kmin) * count + (k - kmin)) += bx.value[a] * by.value[b];
      }
    }
    rhs(s) = samples[s].value;
  }
  const double reg = std::sqrt(lambda);
  for (int u = 0; u < unknowns; ++u) A(rows + u, u) = reg;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const auto& R = qr.matrixR();
  const double rmax = std::abs(R(0, 0));
  const double rmin = std::abs(R(unknowns - 1, unknowns - 1));
  const double condition = rmin > 0.0 ? rmax / rmin : std::numeric_limits<double>::infinity();
  if (lambda == 0.0 && condition > 1e12)
    throw Error(ErrorCode::SingularSystem, "least-squares system is numerically singular (condition " +
                                               std::to_string(condition) + ")");
  const Eigen::VectorXd x = qr.solve(rhs);

  LeastSquaresFit fit;
  fit.spline = TensorSpline(degree, knot_spacing, 0.0, kmin, count, std::vector<double>(x.data(), x.data() + unknowns));
  fit.residual = (A.topRows(rows) * x - rhs.head(rows)).norm();
  fit.condition = condition;
  return fit;
}

// ---------------------------------------------------------------------------
// Point-value quasi-interpolation on a mesh

TensorSpline quasi_fit_on_mesh(std::span<const double> mesh_values, int m) {
  if (m < 4) throw Error(ErrorCode::InvalidArgument, "mesh needs at least 4 points per axis");
  if (mesh_values.size() != static_cast<std::size_t>(m) * m)
    throw Error(ErrorCode::InvalidArgument, "mesh needs m*m values");
  constexpr int ghost = 2;
  const int w = m + 2 * ghost;
  std::vector<double> ext(static_cast<std::size_t>(w) * w, 0.0);
  auto at = [&](int a, int b) -> double& { return ext[static_cast<std::size_t>(b + ghost) * w + (a + ghost)]; };
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) at(a, b) = mesh_values[static_cast<std::size_t>(b) * m + a];

  // cubic extrapolation, one layer at a time, exact for cubics
  auto extend = [](double f0, double f1, double f2, double f3) { return 4.0 * f0 - 6.0 * f1 + 4.0 * f2 - f3; };
  for (int b = 0; b < m; ++b)
    for (int layer = 1; layer <= ghost; ++layer) {
      at(-layer, b) = extend(at(-layer + 1, b), at(-layer + 2, b), at(-layer + 3, b), at(-layer + 4, b));
      at(m - 1 + layer, b) = extend(at(m - 2 + layer, b), at(m - 3 + layer, b), at(m - 4 + layer, b), at(m - 5 + layer, b));
    }
  for (int a = -ghost; a < m + ghost; ++a)
    for (int layer = 1; layer <= ghost; ++layer) {
      at(a, -layer) = extend(at(a, -layer + 1), at(a, -layer + 2), at(a, -layer + 3), at(a, -layer + 4));
      at(a, m - 1 + layer) = extend(at(a, m - 2 + layer), at(a, m - 3 + layer), at(a, m - 4 + layer), at(a, m - 5 + layer));
    }

  const double stencil[3] = {-1.0 / 6.0, 8.0 / 6.0, -1.0 / 6.0};
  const int kmin = -1, count = m + 2;
  std::vector<double> coeff(static_cast<std::size_t>(count) * count);
  for (int l = kmin; l < kmin + count; ++l)
    for (int k = kmin; k < kmin + count; ++k) {
      double sum = 0.0;
      for (int b = -1; b <= 1; ++b)
        for (int a = -1; a <= 1; ++a) sum += stencil[a + 1] * stencil[b + 1] * at(k + a, l + b);
      coeff[static_cast<std::size_t>(l - kmin) * count + (k - kmin)] = sum;
    }
  return TensorSpline(3, 1.0 / (m - 1), 0.0, kmin, count, std::move(coeff));
}

}  // namespace cellrecon
