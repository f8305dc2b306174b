#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cellrecon/edge.hpp"
#include "cellrecon/error.hpp"
#include "oracles.hpp"

using namespace cellrecon;

namespace {

CellPartition partition_of(const CellGrid& g) {
  return detect(g, compute_signature(g), ThresholdMode::Theoretical, estimate_delta(g));
}

TestFunction flat_edge(double level, double slope = 0.0) {
  return graph_edge([](double, double) { return 0.0; }, [](double, double) { return 1.0; },
                    [=](double x) { return level + slope * x; }, [=](double) { return slope; });
}

// Window in the identity frame filled from the exact quadratic-edge oracle.
EdgeWindow synthetic_window(double h, double a, double b, double c, const oracle::Lin& l1, const oracle::Lin& l2) {
  EdgeWindow w;
  w.h = h;
  for (int j = 2; j <= 9; ++j)
    for (int i = 2; i <= 4; ++i)
      w.cells[(i - 2) + 3 * (j - 2)] =
          oracle::quadratic_edge_mean(a, b, c, l1, l2, (i - 1) * h, i * h, (j - 1) * h, j * h);
  return w;
}

std::array<double, 3> column_sums(const EdgeWindow& w) {
  std::array<double, 3> s{};
  for (int i = 2; i <= 4; ++i) s[i - 2] = w.cell(i, 4) + w.cell(i, 5) + w.cell(i, 6) + w.cell(i, 7);
  return s;
}

CellIndex nearest_u0(const CellPartition& p, const CellGrid& g, Point2 target) {
  CellIndex best = p.u0.front();
  for (auto c : p.u0)
    if (distance(g.center(c.i, c.j), target) < distance(g.center(best.i, best.j), target)) best = c;
  return best;
}

}  // namespace

TEST(Window, HorizontalEdgeIsYofX) {
  const int n = 40;
  const CellGrid g = discretize(flat_edge(0.5 + 0.3 / n), n);
  const auto p = partition_of(g);
  const auto w = build_window(p, g, nearest_u0(p, g, {0.5, 0.5}));
  EXPECT_EQ(w.orientation, Orientation::YofX);
  for (int i = 2; i <= 4; ++i) {
    for (int j : {2, 3}) EXPECT_EQ(w.cell(i, j), 0.0);
    for (int j : {8, 9}) EXPECT_EQ(w.cell(i, j), 1.0);
  }
}

TEST(Window, VerticalStepIsXofY) {
  const int n = 40;
  const CellGrid g = discretize(step(0.5 + 0.3 / n), n);
  const auto p = partition_of(g);
  const auto w = build_window(p, g, nearest_u0(p, g, {0.5, 0.5}));
  EXPECT_EQ(w.orientation, Orientation::XofY);
}

TEST(Window, QuarterCircleNearLeftEndIsYofX) {
  const int n = 40;
  const CellGrid g = discretize(open_quarter_circle(), n);
  const auto p = partition_of(g);
  const auto w = build_window(p, g, nearest_u0(p, g, {0.1, 0.70}));
  // the exact circle x^2+y^2 = 0.5 has |dy/dx| = x/y ~ 0.14 < 1 there
  EXPECT_EQ(w.orientation, Orientation::YofX);
}

TEST(Window, FrameMapsLocalCentresToGlobalCentres) {
  const int n = 40;
  const double h = 1.0 / n;
  const CellGrid g = discretize(closed_circle(), n);
  const auto p = partition_of(g);
  int checked = 0;
  for (auto anchor : p.u0) {
    EdgeWindow w;
    try {
      w = build_window(p, g, anchor);
    } catch (const Error&) {
      continue;
    }
    for (int j = 2; j <= 9; ++j)
      for (int i = 2; i <= 4; ++i) {
        const Point2 local{(i - 0.5) * h, (j - 0.5) * h};
        const CellIndex gc = w.global_cell(i, j);
        const Point2 global = w.frame.to_global(local);
        EXPECT_NEAR(global.x, g.center(gc.i, gc.j).x, 1e-14);
        EXPECT_NEAR(global.y, g.center(gc.i, gc.j).y, 1e-14);
        EXPECT_EQ(w.cell(i, j), g(gc.i, gc.j));
      }
    ++checked;
  }
  EXPECT_GT(checked, 40);
}

TEST(LinearPieces, SameLinearFunctionOnBothSides) {
  const oracle::Lin l{2.0, -1.0, 3.0};
  const auto w = synthetic_window(0.05, 0.0, 0.0, 5.5 * 0.05, l, l);
  const auto [lo, up] = fit_linear_pieces(w);
  for (const auto& piece : {lo, up}) {
    EXPECT_NEAR(piece.alpha, 2.0, 1e-12);
    EXPECT_NEAR(piece.beta, -1.0, 1e-12);
    EXPECT_NEAR(piece.gamma, 3.0, 1e-12);
  }
}

TEST(LinearPieces, ConstantPieces) {
  const auto w = synthetic_window(0.05, 0.0, 0.1, 5.2 * 0.05, {0, 0, 0}, {0, 0, 1});
  const auto [lo, up] = fit_linear_pieces(w);
  EXPECT_NEAR(lo.alpha, 0.0, 1e-12);
  EXPECT_NEAR(lo.beta, 0.0, 1e-12);
  EXPECT_NEAR(lo.gamma, 0.0, 1e-12);
  EXPECT_NEAR(up.alpha, 0.0, 1e-12);
  EXPECT_NEAR(up.beta, 0.0, 1e-12);
  EXPECT_NEAR(up.gamma, 1.0, 1e-12);
}

TEST(LinearPieces, QuarterCircleLowerPieceThroughFrame) {
  const int n = 40;
  const CellGrid g = discretize(open_quarter_circle(), n);
  const auto p = partition_of(g);
  const auto w = build_window(p, g, nearest_u0(p, g, {0.1, 0.70}));
  const auto [lo, up] = fit_linear_pieces(w);
  // f1 = x + y pulled back through global = M local + t
  const auto& m = w.frame.m;
  const auto& t = w.frame.t;
  EXPECT_NEAR(lo.alpha, m[0] + m[2], 1e-12);
  EXPECT_NEAR(lo.beta, m[1] + m[3], 1e-12);
  EXPECT_NEAR(lo.gamma, t[0] + t[1], 1e-12);
}

TEST(System, FlatEdgeAtBandBottom) {
  const double h = 0.05;
  const LinearPiece l1{0.3, 0.2, 1.0}, l2{-0.4, 0.1, 3.0};
  const auto sys = assemble_quadratic_system(h, l1, l2, {0, 0, 0});
  const auto q = sys.value({0.0, 0.0, 3.0});
  for (int i = 2; i <= 4; ++i) {
    // h^-2 times the integral of L2 over column i, rows 4..7, in closed form
    const double x0 = (i - 1) * h, x1 = i * h, y0 = 3 * h, y1 = 7 * h;
    const double integral = (l2.alpha * 0.5 * (x1 * x1 - x0 * x0) * (y1 - y0) +
                             l2.beta * 0.5 * (y1 * y1 - y0 * y0) * (x1 - x0) + l2.gamma * (x1 - x0) * (y1 - y0)) /
                            (h * h);
    EXPECT_NEAR(q[i - 2], integral, 1e-12);
  }
}

TEST(System, ModelMatchesExactIntegration) {
  const double h = 0.1;
  const oracle::Lin l1{1, 0, 0}, l2{-1, 0, 1};
  const double a = 0.5, b = 1.0, c = 2.0;  // q(x) = 0.5 x^2 + x + 2h
  const auto w = synthetic_window(h, a, b, c * h, l1, l2);
  const auto sys = assemble_quadratic_system(h, {1, 0, 0}, {-1, 0, 1}, column_sums(w));
  const auto q = sys.value({a * h, b, c});
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(q[k], sys.target[k], 1e-12);
}

TEST(System, DeterminantForConstantPieces) {
  const double h = 0.05;
  for (double c1 : {-0.5, 0.0, 2.0})
    for (double c2 : {1.0, 3.5}) {
      const auto sys = assemble_quadratic_system(h, {0, 0, c1}, {0, 0, c2}, {0, 0, 0});
      for (const std::array<double, 3> v : {std::array<double, 3>{0.0, 0.0, 5.0}, {0.05, -0.3, 4.6}, {-0.02, 0.4, 4.0}})
        EXPECT_NEAR(sys.jacobian_det(v), 2 * std::pow(c2 - c1, 3), 1e-9 * std::max(1.0, std::pow(c2 - c1, 3)));
    }
}

TEST(System, JacobianMatchesFiniteDifferences) {
  const double h = 0.05;
  const auto sys = assemble_quadratic_system(h, {0.7, -0.3, 0.2}, {0.1, 0.4, 1.9}, {0, 0, 0});
  const std::array<double, 3> v{0.04, 0.3, 4.7};
  const auto J = sys.jacobian(v);
  for (int k = 0; k < 3; ++k) {
    const double e = 1e-6;
    auto vp = v, vm = v;
    vp[k] += e;
    vm[k] -= e;
    const auto qp = sys.value(vp), qm = sys.value(vm);
    for (int r = 0; r < 3; ++r) {
      const double fd = (qp[r] - qm[r]) / (2 * e);
      EXPECT_NEAR(J[r * 3 + k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Newton, TruthIsAFixedPoint) {
  const double h = 0.1;
  const double a = 0.5, b = 1.0, c = 2.0;  // Y from 3.05 to 6.8 over the window
  const auto w = synthetic_window(h, a, b, c * h, {1, 0, 0}, {-1, 0, 1});
  const auto sys = assemble_quadratic_system(h, {1, 0, 0}, {-1, 0, 1}, column_sums(w));
  const auto r = newton_solve(sys, {a * h, b, c});
  EXPECT_EQ(r.iterations, 1);
  EXPECT_NEAR(r.v[0], a * h, 1e-14);
  EXPECT_NEAR(r.v[1], b, 1e-14);
  EXPECT_NEAR(r.v[2], c, 1e-14);
}

TEST(Newton, RecoversQuadraticEdgeFromLineFit) {
  // q(x) = x^2/4 + x/2 + 4h; the band rows 4..7 hold the whole arc
  const double h = 0.1;
  const double a = 0.25, b = 0.5, c = 4.0;
  const auto w = synthetic_window(h, a, b, c * h, {0, 0, 0}, {0, 0, 1});
  const auto [lo, up] = fit_linear_pieces(w);
  const auto sys = assemble_quadratic_system(w, lo, up);
  // start: straight line through the column heights implied by the sums
  std::array<double, 3> heights{};
  for (int i = 2; i <= 4; ++i) heights[i - 2] = 3.0 + (4.0 - sys.target[i - 2]);
  const double slope = 0.5 * (heights[2] - heights[0]);
  const auto r = newton_solve(sys, {0.0, slope, heights[1] - slope * 2.5});
  EXPECT_LE(r.iterations, 8);
  EXPECT_NEAR(r.v[0], a * h, 1e-10);
  EXPECT_NEAR(r.v[1], b, 1e-10);
  EXPECT_NEAR(r.v[2], c, 1e-10);
}

TEST(Newton, ZeroJumpIsSingular) {
  const auto sys = assemble_quadratic_system(0.05, {0, 0, 1}, {0, 0, 1}, {4, 4, 4});
  try {
    newton_solve(sys, {0.0, 0.0, 5.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularJacobian);
  }
}

TEST(Chain, StraightEdgeHasNoCurvature) {
  const int n = 40;
  const CellGrid g = discretize(flat_edge(0.55, 0.1), n);
  const auto p = partition_of(g);
  const auto chain = chain_arcs(p, g);
  ASSERT_GT(chain.arcs.size(), 10u);
  for (const auto& arc : chain.arcs) {
    ASSERT_EQ(arc.orientation, Orientation::YofX);
    EXPECT_LE(std::abs(arc.a), 1e-9);
    // local y runs along sigma * global y
    EXPECT_NEAR(arc.frame.m[3] * arc.b, 0.1, 1e-9);
  }
}

TEST(Chain, CircleSamplesConvergeFast) {
  const double r = std::sqrt(0.1);
  std::vector<double> err;
  for (int n : {40, 80}) {
    const CellGrid g = discretize(closed_circle(), n);
    const auto chain = chain_arcs(partition_of(g), g);
    EXPECT_TRUE(chain.skipped.empty()) << n;
    double worst = 0.0;
    for (auto q : chain.points) worst = std::max(worst, oracle::circle_distance(q, 0.5, 0.5, r));
    err.push_back(worst);
  }
  EXPECT_GE(err[0] / err[1], 6.0);
}

TEST(Chain, FramesRoundTrip) {
  const CellGrid g = discretize(closed_circle(), 40);
  const auto chain = chain_arcs(partition_of(g), g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  double worst = 0.0;
  for (const auto& arc : chain.arcs)
    for (int k = 0; k < 1000; ++k) {
      const Point2 q{u(rng), u(rng)};
      worst = std::max(worst, distance(arc.frame.to_local(arc.frame.to_global(q)), q));
    }
  EXPECT_LE(worst, 1e-14);
}

TEST(Chain, SamplesStayOnTheirSide) {
  const CellGrid g = discretize(closed_circle(), 40);
  const auto chain = chain_arcs(partition_of(g), g);
  for (const auto& arc : chain.arcs) {
    // cell centres well inside the disc are on the u1 side exactly when below the arc
    const Point2 inside = arc.frame.to_global({2.5 * arc.h, 2.5 * arc.h});
    const Point2 outside = arc.frame.to_global({2.5 * arc.h, 8.5 * arc.h});
    EXPECT_TRUE(arc.below(inside));
    EXPECT_FALSE(arc.below(outside));
  }
}

TEST(Chain, EmptyBandFails) {
  CellPartition p;
  p.n = 8;
  p.labels.assign(64, 1);
  for (int j = 1; j <= 8; ++j)
    for (int i = 1; i <= 8; ++i) p.u1.push_back({i, j});
  try {
    chain_arcs(p, CellGrid::filled(8, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyChain);
  }
}
