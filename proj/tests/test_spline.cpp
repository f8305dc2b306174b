#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cellrecon/error.hpp"
#include "cellrecon/spline.hpp"
#include "oracles.hpp"

using namespace cellrecon;

namespace {

// Extended grid holding exact averages of `mean(x0,x1,y0,y1)` in every cell.
template <class Mean>
ExtendedCellGrid exact_extended(int n, int pad, Mean mean) {
  ExtendedCellGrid e(n, pad);
  const double h = 1.0 / n;
  FillProvenance orig;
  orig.source = FillProvenance::Source::Original;
  for (int j = e.lo(); j <= e.hi(); ++j)
    for (int i = e.lo(); i <= e.hi(); ++i) e.set(i, j, mean((i - 1) * h, i * h, (j - 1) * h, j * h), orig);
  return e;
}

ExtendedCellGrid poly_extended(const oracle::Poly& p, int n, int pad = 4) {
  return exact_extended(n, pad, [&](double x0, double x1, double y0, double y1) {
    return oracle::cell_mean(p, x0, x1, y0, y1);
  });
}

double sinsin_mean(double x0, double x1, double y0, double y1) {
  return (std::cos(M_PI * x0) - std::cos(M_PI * x1)) / (M_PI * (x1 - x0)) *
         (std::cos(M_PI * y0) - std::cos(M_PI * y1)) / (M_PI * (y1 - y0));
}

double max_error_101(const TensorSpline& s, const std::function<double(double, double)>& f) {
  double worst = 0.0;
  for (int b = 0; b <= 100; ++b)
    for (int a = 0; a <= 100; ++a) worst = std::max(worst, std::abs(s(a / 100.0, b / 100.0) - f(a / 100.0, b / 100.0)));
  return worst;
}

}  // namespace

TEST(CentralFactorial, BaseValues) {
  EXPECT_EQ(central_factorial(0, 0), 1);
  EXPECT_EQ(central_factorial(1, 1), 1);
  EXPECT_EQ(central_factorial(0, 1), 0);
  EXPECT_EQ(central_factorial(5, 7), 0);
}

TEST(CentralFactorial, ProductFormulaForSecondIndexOne) {
  for (int i = 2; i <= 9; ++i) {
    Rational prod = 1;
    for (int l = 1; l <= i - 1; ++l) prod *= Rational(i, 2) - l;
    EXPECT_EQ(central_factorial(i, 1), prod) << i;
  }
  EXPECT_EQ(to_string(central_factorial(3, 1)), "-1/4");
}

TEST(QuasiCoeffs, TableValues) {
  const std::vector<std::vector<std::string>> table{
      {"1"}, {"5/4", "-1/8"}, {"4/3", "-1/6"}, {"319/192", "-107/288", "47/1152"}, {"73/40", "-7/15", "13/240"}};
  for (int p = 1; p <= 5; ++p) {
    const auto c = quasi_coeffs(p);
    ASSERT_EQ(c.radius(), p / 2);
    for (int j = 0; j <= p / 2; ++j) {
      EXPECT_EQ(to_string(c.at(j)), table[p - 1][j]) << "p=" << p << " j=" << j;
      EXPECT_EQ(c.at(j), c.at(-j));
    }
    Rational sum = 0;
    for (int j = -p / 2; j <= p / 2; ++j) sum += c.at(j);
    EXPECT_EQ(sum, 1) << p;
  }
}

TEST(LocalOp, ConstantWindow) {
  for (int p = 1; p <= 5; ++p) {
    const int w = 2 * (p / 2) + 1;
    std::vector<double> win(w * w, 2.5);
    EXPECT_NEAR(local_op_L(p, win), 2.5, 1e-14);
  }
}

TEST(LocalOp, CentreImpulse) {
  std::vector<double> win(9, 0.0);
  win[4] = 1.0;
  EXPECT_DOUBLE_EQ(local_op_L(2, win), 25.0 / 16.0);
}

// L_4 of cubic averages is the cubic B-spline coefficient, i.e. the dual
// functional (1 - h^2/6 d_xx)(1 - h^2/6 d_yy) applied at the window centre.
TEST(LocalOp, CubicAveragesGiveBsplineCoefficient) {
  const oracle::Poly p{{1.0, 3, 0}, {-2.0, 1, 2}, {0.7, 0, 1}, {0.3, 2, 1}, {1.1, 0, 0}};
  const double h = 0.05, cx = 0.4, cy = 0.55;
  std::vector<double> win;
  for (int b = -2; b <= 2; ++b)
    for (int a = -2; a <= 2; ++a) {
      const double x = cx + a * h, y = cy + b * h;
      win.push_back(oracle::cell_mean(p, x - h / 2, x + h / 2, y - h / 2, y + h / 2));
    }
  const double pxx = 6.0 * cx + 0.6 * cy, pyy = -4.0 * cx, pxxyy = 0.0;
  const double dual = oracle::eval(p, cx, cy) - h * h / 6 * (pxx + pyy) + h * h * h * h / 36 * pxxyy;
  EXPECT_NEAR(local_op_L(4, win), dual, 1e-11);
}

TEST(LocalOp, MissingCellThrows) {
  std::vector<double> win(9, 1.0);
  win[3] = std::nan("");
  EXPECT_THROW(local_op_L(3, win), Error);
}

TEST(Bspline, PartitionOfUnity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int p = 1; p <= 5; ++p) {
    const double d = 0.1;
    const int kmin = -p - 2, count = 16 + 2 * p;
    const TensorSpline s(p, d, 0.0, kmin, count, std::vector<double>(count * count, 0.0));
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) worst = std::max(worst, std::abs(s.basis_sum(u(rng), u(rng)) - 1.0));
    EXPECT_LE(worst, 1e-13) << p;
  }
}

TEST(Bspline, CubicValuesAtKnot) {
  std::vector<double> v(4);
  bspline_values(3, 0.0, v);
  EXPECT_NEAR(v[0], 1.0 / 6, 1e-15);
  EXPECT_NEAR(v[1], 2.0 / 3, 1e-15);
  EXPECT_NEAR(v[2], 1.0 / 6, 1e-15);
  EXPECT_NEAR(v[3], 0.0, 1e-15);
}

TEST(Bspline, DerivativesMatchFiniteDifferences) {
  for (int p = 2; p <= 5; ++p)
    for (double t : {0.1, 0.37, 0.8}) {
      std::vector<double> v(p + 1), d(p + 1), vp(p + 1), vm(p + 1);
      bspline_values_and_derivatives(p, t, v, d);
      const double e = 1e-6;
      bspline_values(p, t + e, vp);
      bspline_values(p, t - e, vm);
      for (int k = 0; k <= p; ++k) EXPECT_NEAR(d[k], (vp[k] - vm[k]) / (2 * e), 1e-6 * std::max(1.0, std::abs(d[k])));
    }
}

TEST(Quasi, ConstantIsReproduced) {
  const TensorSpline s = quasi_interpolant(poly_extended({{3.25, 0, 0}}, 12), 3);
  EXPECT_LE(max_error_101(s, [](double, double) { return 3.25; }), 1e-13);
}

TEST(Quasi, CubicIsReproduced) {
  const oracle::Poly p{{1.0, 3, 0}, {-2.0, 1, 2}, {1.0, 0, 1}};
  const TensorSpline s = quasi_interpolant(poly_extended(p, 16), 3);
  EXPECT_LE(max_error_101(s, [&](double x, double y) { return oracle::eval(p, x, y); }), 1e-10);
}

TEST(Quasi, BicubicSpaceIsReproduced) {
  const oracle::Poly p{{0.5, 3, 3}, {-1.0, 2, 3}, {0.25, 3, 1}, {2.0, 0, 0}};
  const TensorSpline s = quasi_interpolant(poly_extended(p, 10), 3);
  EXPECT_LE(max_error_101(s, [&](double x, double y) { return oracle::eval(p, x, y); }), 1e-9);
}

TEST(Quasi, FourthOrderOnSmoothData) {
  const auto f = [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); };
  std::vector<double> err;
  for (int n : {16, 32, 64}) err.push_back(max_error_101(quasi_interpolant(exact_extended(n, 4, sinsin_mean), 3), f));
  for (int k = 0; k + 1 < 3; ++k) {
    const double order = std::log2(err[k] / err[k + 1]);
    EXPECT_GE(order, 3.6);
    EXPECT_LE(order, 4.4);
  }
}

TEST(Quasi, IncompleteRequiredWindowThrows) {
  const auto e = ExtendedCellGrid::from_grid(CellGrid::filled(8, 1.0), 4);
  try {
    quasi_interpolant(e, 3);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::IncompleteWindow);
  }
}

TEST(LeastSquares, RecoversSplineFromDenseSamples) {
  const int kmin = -2, count = 9;
  std::vector<double> coeff(count * count);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& c : coeff) c = u(rng);
  const TensorSpline truth(3, 0.25, 0.0, kmin, count, coeff);
  std::vector<Sample> samples;
  for (int b = 0; b <= 24; ++b)
    for (int a = 0; a <= 24; ++a) samples.push_back({a / 24.0, b / 24.0, truth(a / 24.0, b / 24.0)});
  const auto fit = fit_least_squares(samples, 3, 0.25, 0.0);
  for (int l = -1; l <= 5; ++l)
    for (int k = -1; k <= 5; ++k)
      if (fit.spline.has_coeff(k, l)) EXPECT_NEAR(fit.spline.coeff(k, l), truth.coeff(k, l), 1e-8) << k << "," << l;
  EXPECT_LE(max_error_101(fit.spline, [&](double x, double y) { return truth(x, y); }), 1e-8);
}

TEST(LeastSquares, ZeroSamplesGiveZeroSpline) {
  std::vector<Sample> samples;
  for (int b = 0; b < 20; ++b)
    for (int a = 0; a < 20; ++a) samples.push_back({(a + 0.5) / 20, (b + 0.5) / 20, 0.0});
  const auto fit = fit_least_squares(samples, 3, 0.25);
  for (double c : fit.spline.coefficients())
    if (std::isfinite(c)) EXPECT_EQ(c, 0.0);
}

TEST(LeastSquares, SignedDistanceCircle) {
  const int n = 40;
  const double r = std::sqrt(0.1);
  std::vector<Sample> samples;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      const double x = (i - 0.5) / n, y = (j - 0.5) / n;
      samples.push_back({x, y, r - std::hypot(x - 0.5, y - 0.5)});
    }
  const auto fit = fit_least_squares(samples, 3, 0.25);
  const auto lines = zero_level_curve(fit.spline);
  ASSERT_FALSE(lines.empty());
  double worst = 0.0;
  for (const auto& l : lines)
    for (auto p : l.points) worst = std::max(worst, oracle::circle_distance(p, 0.5, 0.5, r));
  EXPECT_LE(worst, 0.05);
}

TEST(MeshFit, ConstantAndCubic) {
  const int m = 21;
  std::vector<double> c(m * m, -0.75), cubic;
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      const double x = a / (m - 1.0), y = b / (m - 1.0);
      cubic.push_back(x * x * x + y * y * y);
    }
  EXPECT_LE(max_error_101(quasi_fit_on_mesh(c, m), [](double, double) { return -0.75; }), 1e-13);
  EXPECT_LE(max_error_101(quasi_fit_on_mesh(cubic, m), [](double x, double y) { return x * x * x + y * y * y; }),
            1e-10);
}

TEST(MeshFit, FourthOrderOnRadialFunction) {
  const auto f = [](double x, double y) { return std::exp(-4.0 * ((x - 0.5) * (x - 0.5) + (y - 0.3) * (y - 0.3))); };
  std::vector<double> err;
  for (int m : {17, 33, 65}) {
    std::vector<double> v;
    for (int b = 0; b < m; ++b)
      for (int a = 0; a < m; ++a) v.push_back(f(a / (m - 1.0), b / (m - 1.0)));
    err.push_back(max_error_101(quasi_fit_on_mesh(v, m), f));
  }
  for (int k = 0; k + 1 < 3; ++k) {
    const double order = std::log2(err[k] / err[k + 1]);
    EXPECT_GE(order, 3.6);
    EXPECT_LE(order, 4.4);
  }
}

TEST(Contour, StraightLine) {
  const int kmin = -2, count = 9;
  const double d = 0.25;
  std::vector<double> coeff;
  for (int l = kmin; l < kmin + count; ++l)
    for (int k = kmin; k < kmin + count; ++k) coeff.push_back(k * d - 0.5);
  const TensorSpline s(3, d, 0.0, kmin, count, coeff);
  const auto lines = zero_level_curve(s);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_FALSE(lines[0].closed);
  for (auto p : lines[0].points) EXPECT_NEAR(p.x, 0.5, 1e-10);
}

TEST(Contour, CircleFromQuadratic) {
  const int m = 11;
  std::vector<double> v;
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      const double x = a / (m - 1.0), y = b / (m - 1.0);
      v.push_back((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) - 0.1);
    }
  ContourOptions opts;
  opts.resolution = 512;
  opts.max_segment = 1e-3;  // raw chords (~2e-3) would sag by ~1.5e-6
  const auto lines = zero_level_curve(quasi_fit_on_mesh(v, m), opts);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_TRUE(lines[0].closed);
  const double r = std::sqrt(0.1);
  double worst = 0.0;
  for (auto p : lines[0].points) worst = std::max(worst, oracle::circle_distance(p, 0.5, 0.5, r));
  // the other direction: every circle point is near some chord of the polyline
  const auto& pts = lines[0].points;
  for (int k = 0; k < 2000; ++k) {
    const Point2 c{0.5 + r * std::cos(2 * M_PI * k / 2000), 0.5 + r * std::sin(2 * M_PI * k / 2000)};
    double best = INFINITY;
    for (std::size_t s = 0; s < pts.size(); ++s)
      best = std::min(best, distance(c, project_to_segment(c, pts[s], pts[(s + 1) % pts.size()])));
    worst = std::max(worst, best);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Contour, NoZeroLevel) {
  const TensorSpline s(3, 0.25, 0.0, -2, 9, std::vector<double>(81, 1.0));
  try {
    zero_level_curve(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyContour);
  }
}
