// Acceptance runner: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cellrecon/curve.hpp"
#include "cellrecon/edge.hpp"
#include "cellrecon/pipeline.hpp"
#include "cellrecon/reconstruct.hpp"
#include "cellrecon/signature.hpp"
#include "cellrecon/spline.hpp"
#include "oracles.hpp"

using namespace cellrecon;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> orders(const std::vector<double>& err) {
  std::vector<double> o;
  for (std::size_t k = 1; k < err.size(); ++k) o.push_back(std::log2(err[k - 1] / err[k]));
  return o;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt("%.3g", x);
  return s;
}

template <class F>
auto per_n(const std::vector<int>& ns, F&& f) {
  std::vector<std::future<decltype(f(0))>> jobs;
  for (int n : ns) jobs.push_back(std::async(std::launch::async, f, n));
  std::vector<decltype(f(0))> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

EdgeWindow oracle_window(double h, double a, double b, double c, const oracle::Lin& l1, const oracle::Lin& l2) {
  EdgeWindow w;
  w.h = h;
  for (int j = 2; j <= 9; ++j)
    for (int i = 2; i <= 4; ++i)
      w.cells[(i - 2) + 3 * (j - 2)] =
          oracle::quadratic_edge_mean(a, b, c, l1, l2, (i - 1) * h, i * h, (j - 1) * h, j * h);
  return w;
}

const std::vector<int> kNs{40, 80, 160};

Outcome coefficient_fidelity() {
  const std::vector<std::vector<std::string>> table{
      {"1"}, {"5/4", "-1/8"}, {"4/3", "-1/6"}, {"319/192", "-107/288", "47/1152"}, {"73/40", "-7/15", "13/240"}};
  Outcome o;
  for (int p = 1; p <= 5; ++p) {
    const auto c = quasi_coeffs(p);
    Rational sum = 0;
    for (int j = -c.radius(); j <= c.radius(); ++j) {
      sum += c.at(j);
      if (to_string(c.at(j)) != table[p - 1][std::abs(j)]) {
        o.pass = false;
        o.detail += fmt("p=%d j=%d got %s; ", p, j, to_string(c.at(j)).c_str());
      }
    }
    if (sum != 1) {
      o.pass = false;
      o.detail += fmt("p=%d sum %s; ", p, to_string(sum).c_str());
    }
  }
  if (o.pass) o.detail = "p=1..5 match, sums are 1";
  return o;
}

Outcome edge_model_exactness() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int max_iters = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double h = 0.02 + 0.08 * u(rng);
    // edge heights (units of h) at X = 1, 2.5, 4 inside the band [3, 7]
    const double y1 = 3.3 + 3.4 * u(rng), y2 = 3.3 + 3.4 * u(rng), y3 = 3.3 + 3.4 * u(rng);
    // Y = A X^2 + b X + c through the three points
    const double A = ((y3 - y2) / 1.5 - (y2 - y1) / 1.5) / 3.0;
    const double b = (y2 - y1) / 1.5 - A * 3.5;
    const double c = y1 - A - b;
    const double jump = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 1.5 * u(rng));
    const oracle::Lin l2{u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5};
    const oracle::Lin l1{l2.alpha + 0.2 * (u(rng) - 0.5), l2.beta + 0.2 * (u(rng) - 0.5), l2.gamma + jump};
    // global q(x) = (A/h) x^2 + b x + c h
    const auto w = oracle_window(h, A / h, b, c * h, l1, l2);
    const auto [lower, upper] = fit_linear_pieces(w);
    const auto sys = assemble_quadratic_system(w, lower, upper);
    // start from the secant line through the edge at the outer column centres
    const double s = (A * 3.5 * 3.5 + b * 3.5 - A * 1.5 * 1.5 - b * 1.5) / 2.0;
    const double i0 = A * 1.5 * 1.5 + b * 1.5 + c - s * 1.5;
    const auto r = newton_solve(sys, {0.0, s, i0});
    worst = std::max({worst, std::abs(r.v[0] - A), std::abs(r.v[1] - b), std::abs(r.v[2] - c)});
    max_iters = std::max(max_iters, r.iterations);
  }
  return {worst <= 1e-8 && max_iters <= 8, fmt("max coefficient error %.2e, max iterations %d", worst, max_iters)};
}

Outcome jacobian_determinant() {
  const double h = 0.05, a = 0.1, b = 0.2, c = 4.0;  // Y from 4.3 to 6.4 across the window
  double worst = 0.0;
  for (double delta : {0.5, 1.0, 2.0}) {
    const auto w = oracle_window(h, a / h, b, c * h, {0.0, 0.0, 0.0}, {0.0, 0.0, delta});
    const auto [lower, upper] = fit_linear_pieces(w);
    const auto sys = assemble_quadratic_system(w, lower, upper);
    const auto r = newton_solve(sys, {0.0, b, c});
    worst = std::max(worst, std::abs(sys.jacobian_det(r.v) - 2.0 * delta * delta * delta));
  }
  return {worst <= 1e-8, fmt("max |det - 2 delta^3| = %.2e", worst)};
}

struct CircleRun {
  double arcs = 0.0, first = 0.0, enhanced = 0.0;
};

std::vector<CircleRun> circle_runs;

void run_circle() {
  const auto f = closed_circle();
  circle_runs = per_n(kNs, [&](int n) {
    const auto res = run_pipeline(discretize(f, n));
    CircleRun c;
    for (auto p : res.chain->points) c.arcs = std::max(c.arcs, oracle::circle_distance(p, 0.5, 0.5, std::sqrt(0.1)));
    c.first = curve_distance(res.first_curve->polylines, *f.curve, 3.0 / n).clipped_hausdorff;
    c.enhanced = curve_distance(res.enhanced_curve->polylines, *f.curve, 3.0 / n).clipped_hausdorff;
    return c;
  });
}

Outcome local_curve_order() {
  std::vector<double> err;
  for (const auto& c : circle_runs) err.push_back(c.arcs);
  const auto o = orders(err);
  return {o[0] >= 2.5 && o[1] >= 2.5, "errors " + join(err) + ", orders " + join(o)};
}

Outcome enhanced_curve_order() {
  std::vector<double> err, first;
  bool better = true;
  for (const auto& c : circle_runs) {
    err.push_back(c.enhanced);
    first.push_back(c.first);
    better = better && c.enhanced < c.first;
  }
  const auto o = orders(err);
  return {o[0] >= 2.5 && o[1] >= 2.5 && better,
          "enhanced " + join(err) + " (orders " + join(o) + "), first stage " + join(first)};
}

struct QuarterRun {
  double farfield = 0.0, graph = 0.0;
};

std::vector<QuarterRun> quarter_runs;

void run_quarter() {
  const auto f = open_quarter_circle();
  quarter_runs = per_n(kNs, [&](int n) {
    const auto res = run_pipeline(discretize(f, n));
    return QuarterRun{farfield_error(res.reconstruction, f, 400, 3.0 / n).max_error,
                      graph_hausdorff(res.reconstruction, f, 4 * n)};
  });
}

Outcome farfield_order() {
  std::vector<double> err;
  for (const auto& q : quarter_runs) err.push_back(q.farfield);
  const auto o = orders(err);
  return {o[0] >= 3.4 && o[0] <= 4.6 && o[1] >= 3.4 && o[1] <= 4.6, "errors " + join(err) + ", orders " + join(o)};
}

Outcome graph_order() {
  std::vector<double> err;
  for (const auto& q : quarter_runs) err.push_back(q.graph);
  const auto o = orders(err);
  return {o[0] >= 2.5 && o[1] >= 2.5, "d_H " + join(err) + ", orders " + join(o)};
}

Outcome least_squares_ceiling() {
  const auto f = open_quarter_circle();
  struct Near {
    double ls, quasi;
  };
  const auto runs = per_n({40, 80}, [&](int n) {
    const CellGrid g = discretize(f, n);
    PipelineConfig ls;
    ls.recon = ReconMethod::LeastSquares;
    const auto rl = run_pipeline(g, ls);
    const auto rq = run_pipeline(g);
    const double h = 1.0 / n;
    return Near{nearfield_error(rl.reconstruction, f, 600, 3 * h, 0.1 * h).max_error,
                nearfield_error(rq.reconstruction, f, 600, 3 * h, 0.1 * h).max_error};
  });
  const double order = std::log2(runs[0].ls / runs[1].ls);
  const bool worse = runs[0].ls > runs[0].quasi && runs[1].ls > runs[1].quasi;
  return {order >= 1.4 && order <= 2.6 && worse,
          fmt("least squares %.3g %.3g (order %.3g), quasi %.3g %.3g", runs[0].ls, runs[1].ls, order, runs[0].quasi,
              runs[1].quasi)};
}

Outcome property_suites() {
  std::vector<std::string> fails;
  // signature of bilinear data
  {
    const CellGrid g = oracle::poly_grid({{1.5, 1, 1}, {-2.0, 1, 0}, {0.75, 0, 1}, {3.0, 0, 0}}, 32);
    const auto s = compute_signature(g);
    double worst = 0.0;
    for (int j = 2; j < 32; ++j)
      for (int i = 2; i < 32; ++i) worst = std::max(worst, std::abs(s(i, j)));
    if (worst > 1e-13) fails.push_back(fmt("signature %.2e", worst));
  }
  // aggregate / difference round trip
  for (auto kind : {FunctionKind::OpenQuarterCircle, FunctionKind::ClosedCircle, FunctionKind::Smooth}) {
    const CellGrid g = discretize(make_catalog(kind), 40);
    const CellGrid back = difference(aggregate(g));
    double worst = 0.0;
    for (std::size_t k = 0; k < g.values().size(); ++k) worst = std::max(worst, std::abs(back.values()[k] - g.values()[k]));
    if (worst > 1e-12) fails.push_back(fmt("round trip %.2e", worst));
  }
  // Q3 on the bicubic space
  {
    const oracle::Poly p{{0.5, 3, 3}, {-1.0, 2, 3}, {0.25, 3, 1}, {2.0, 0, 0}};
    const int n = 10, pad = 4;
    const double h = 1.0 / n;
    ExtendedCellGrid e(n, pad);
    FillProvenance orig;
    orig.source = FillProvenance::Source::Original;
    for (int j = e.lo(); j <= e.hi(); ++j)
      for (int i = e.lo(); i <= e.hi(); ++i) e.set(i, j, oracle::cell_mean(p, (i - 1) * h, i * h, (j - 1) * h, j * h), orig);
    const TensorSpline s = quasi_interpolant(e, 3);
    double worst = 0.0;
    for (int b = 0; b <= 100; ++b)
      for (int a = 0; a <= 100; ++a)
        worst = std::max(worst, std::abs(s(a / 100.0, b / 100.0) - oracle::eval(p, a / 100.0, b / 100.0)));
    if (worst > 1e-9) fails.push_back(fmt("bicubic %.2e", worst));
  }
  // analytic Jacobian against central differences
  {
    const double h = 0.05;
    const auto w = oracle_window(h, 0.1 / h, 0.2, 4.0 * h, {0.3, -0.2, 0.1}, {-0.1, 0.4, 1.2});
    const auto [lower, upper] = fit_linear_pieces(w);
    const auto sys = assemble_quadratic_system(w, lower, upper);
    const std::array<double, 3> v{0.12, 0.15, 4.1};
    const auto J = sys.jacobian(v);
    double worst = 0.0;
    for (int c = 0; c < 3; ++c) {
      auto vp = v, vm = v;
      const double step = 1e-6 * std::max(1.0, std::abs(v[c]));
      vp[c] += step;
      vm[c] -= step;
      const auto fp = sys.value(vp), fm = sys.value(vm);
      for (int r = 0; r < 3; ++r) {
        const double fd = (fp[r] - fm[r]) / (2 * step);
        worst = std::max(worst, std::abs(fd - J[3 * r + c]) / std::max(1.0, std::abs(J[3 * r + c])));
      }
    }
    if (worst > 1e-6) fails.push_back(fmt("jacobian %.2e", worst));
  }
  // partition of unity
  for (int p = 1; p <= 5; ++p) {
    const int kmin = -p - 2, count = 16 + 2 * p;
    const TensorSpline s(p, 0.1, 0.0, kmin, count, std::vector<double>(count * count, 0.0));
    std::mt19937_64 rng(p);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) worst = std::max(worst, std::abs(s.basis_sum(u(rng), u(rng)) - 1.0));
    if (worst > 1e-13) fails.push_back(fmt("unity p=%d %.2e", p, worst));
  }
  std::string detail = fails.empty() ? "signature, round trip, bicubic, jacobian, partition of unity" : "";
  for (const auto& f : fails) detail += f + "; ";
  return {fails.empty(), detail};
}

Outcome end_to_end_exactness() {
  const int n = 40;
  const TestFunction f = graph_edge([](double, double) { return 0.0; }, [](double, double) { return 1.0; },
                                    [](double x) { return 0.3 + 0.4 * x * x; }, [](double x) { return 0.8 * x; });
  const auto res = run_pipeline(discretize(f, n));
  // 317^2 ~ 1e5 samples; drop those within 2h of the reconstructed curve
  const auto e = farfield_error(res.reconstruction, f, 317, 0.0, 2.0 / n);
  return {e.max_error <= 1e-10, fmt("max error %.2e over %zu points", e.max_error, e.count)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "coefficient fidelity", coefficient_fidelity},
      {2, "edge-model exactness", edge_model_exactness},
      {3, "jacobian determinant", jacobian_determinant},
      {4, "local curve order", [] {
         run_circle();
         return local_curve_order();
       }},
      {5, "enhanced curve order", enhanced_curve_order},
      {6, "far-field reconstruction order", [] {
         run_quarter();
         return farfield_order();
       }},
      {7, "graph Hausdorff order", graph_order},
      {8, "least-squares ceiling", least_squares_ceiling},
      {9, "property suites", property_suites},
      {10, "end-to-end exactness", end_to_end_exactness},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d (%s): %s -- %s [%.1f s]\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
