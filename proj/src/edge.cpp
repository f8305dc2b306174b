#include "cellrecon/edge.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <Eigen/Dense>

#include "cellrecon/error.hpp"
#include "cellrecon/log.hpp"

namespace cellrecon {

std::string to_string(Orientation o) { return o == Orientation::YofX ? "y-of-x" : "x-of-y"; }

std::vector<Point2> QuadraticArc::sample(int count) const {
  std::vector<Point2> pts;
  pts.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double x = x_lo + (x_hi - x_lo) * k / (count - 1);
    pts.push_back(frame.to_global({x, q(x)}));
  }
  return pts;
}

bool QuadraticArc::below(Point2 global_point) const {
  const Point2 local = frame.to_local(global_point);
  return local.y < q(local.x);
}

// ---------------------------------------------------------------------------
// Window placement

namespace {

// Local x runs along `along` cells (A), local y across them (B = B0 + sigma*j).
struct Placement {
  Orientation orientation;
  int sigma;
  int a0;
  int b0;
};

CellIndex to_global_cell(const Placement& p, int i, int j) {
  const int a = p.a0 + i;
  const int b = p.b0 + p.sigma * j;
  return p.orientation == Orientation::YofX ? CellIndex{a, b} : CellIndex{b, a};
}

Frame frame_for(const Placement& p, double h) {
  Frame f;
  const double across_t = p.sigma > 0 ? p.b0 * h : (p.b0 - 1) * h;
  const double along_t = p.a0 * h;
  if (p.orientation == Orientation::YofX) {
    f.m = {1.0, 0.0, 0.0, static_cast<double>(p.sigma)};
    f.t = {along_t, across_t};
  } else {
    f.m = {0.0, static_cast<double>(p.sigma), 1.0, 0.0};
    f.t = {across_t, along_t};
  }
  return f;
}

EdgeWindow make_window(const CellGrid& g, CellIndex anchor, const Placement& p, int anchor_column) {
  EdgeWindow w;
  w.anchor = anchor;
  w.orientation = p.orientation;
  w.reflected = p.sigma < 0;
  w.h = g.h();
  w.frame = frame_for(p, w.h);
  for (int j = 2; j <= 9; ++j)
    for (int i = 2; i <= 4; ++i) {
      const CellIndex c = to_global_cell(p, i, j);
      w.global[static_cast<std::size_t>((i - 2) + 3 * (j - 2))] = c;
      w.cells[static_cast<std::size_t>((i - 2) + 3 * (j - 2))] = g(c.i, c.j);
    }
  double lo = anchor_column - 1, hi = anchor_column;
  // windows touching the domain edge also cover the boundary column
  if (p.a0 + 2 == 1) lo = std::min(lo, 1.0);
  if (p.a0 + 4 == g.n()) hi = std::max(hi, 4.0);
  w.x_lo = lo * w.h;
  w.x_hi = hi * w.h;
  return w;
}

std::vector<EdgeWindow> candidate_windows(const CellPartition& part, const CellGrid& g, CellIndex anchor,
                                          const WindowOptions& options) {
  const int n = g.n();
  if (!part.contains(anchor.i, anchor.j) || part.label(anchor.i, anchor.j) != 0)
    throw Error(ErrorCode::InvalidArgument, "window anchor must be a U0 cell");

  // local band direction from the U0 cells around the anchor
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  int count = 0;
  for (int radius : {3, 5}) {
    sx = sy = sxx = syy = sxy = 0;
    count = 0;
    for (int j = anchor.j - radius; j <= anchor.j + radius; ++j)
      for (int i = anchor.i - radius; i <= anchor.i + radius; ++i) {
        if (!part.contains(i, j) || part.label(i, j) != 0) continue;
        sx += i, sy += j, sxx += i * i, syy += j * j, sxy += i * j;
        ++count;
      }
    if (count >= 4) break;
  }
  Orientation preferred = Orientation::YofX;
  if (count >= 2) {
    const double cxx = sxx / count - (sx / count) * (sx / count);
    const double cyy = syy / count - (sy / count) * (sy / count);
    // principal direction more horizontal than vertical -> curve y(x)
    preferred = cxx >= cyy ? Orientation::YofX : Orientation::XofY;
  }

  // side normal: from U1 towards U2
  double n1x = 0, n1y = 0, n2x = 0, n2y = 0;
  int c1 = 0, c2 = 0;
  constexpr int kSideRadius = 4;
  for (int j = anchor.j - kSideRadius; j <= anchor.j + kSideRadius; ++j)
    for (int i = anchor.i - kSideRadius; i <= anchor.i + kSideRadius; ++i) {
      if (!part.contains(i, j)) continue;
      const int l = part.label(i, j);
      if (l == 1) n1x += i, n1y += j, ++c1;
      if (l == 2) n2x += i, n2y += j, ++c2;
    }
  if (c1 == 0 || c2 == 0) return {};
  const double nx = n2x / c2 - n1x / c1, ny = n2y / c2 - n1y / c1;

  // strict placements (the six cells feeding the linear fits carry the right
  // side label) come first, then relaxed ones where they only avoid the wrong side
  std::vector<EdgeWindow> strict, relaxed;
  const Orientation other = preferred == Orientation::YofX ? Orientation::XofY : Orientation::YofX;
  for (Orientation o : {preferred, other}) {
    const double normal_across = o == Orientation::YofX ? ny : nx;
    if (normal_across == 0.0) continue;
    const int sigma = normal_across > 0 ? 1 : -1;
    const int a_anchor = o == Orientation::YofX ? anchor.i : anchor.j;
    const int b_anchor = o == Orientation::YofX ? anchor.j : anchor.i;

    int a0 = a_anchor - 3;
    if (a0 + 2 < 1) a0 = -1;
    if (a0 + 4 > n) a0 = n - 4;
    if (a0 + 2 < 1) continue;
    const int anchor_column = a_anchor - a0;

    // line fit of band centres, across coordinate b = sigma*B
    double la = 0, lb = 0, laa = 0, lab = 0;
    int lc = 0;
    for (int a = a0 + 2; a <= a0 + 4; ++a)
      for (int b = b_anchor - 6; b <= b_anchor + 6; ++b) {
        const CellIndex c = o == Orientation::YofX ? CellIndex{a, b} : CellIndex{b, a};
        if (!part.contains(c.i, c.j) || part.label(c.i, c.j) != 0) continue;
        const double s = sigma * b;
        la += a, lb += s, laa += static_cast<double>(a) * a, lab += a * s;
        ++lc;
      }
    if (lc == 0) continue;
    double slope = 0.0;
    const double var = laa - la * la / lc;
    if (var > 1e-12) slope = (lab - la * lb / lc) / var;
    const double b_mid = lb / lc + slope * ((a0 + 3) - la / lc);
    // cell-centre index b_mid should sit at local Y = 5  ->  j = 5.5
    const double beta_ideal = b_mid - 5.5;

    std::vector<int> betas;
    const int base = static_cast<int>(std::lround(beta_ideal));
    for (int s = -options.max_shift; s <= options.max_shift; ++s) betas.push_back(base + s);
    std::stable_sort(betas.begin(), betas.end(), [&](int x, int y) {
      return std::abs(x - beta_ideal) < std::abs(y - beta_ideal);
    });

    for (int beta0 : betas) {
      const Placement p{o, sigma, a0, sigma * beta0};
      bool ok = true;
      for (int j = 2; j <= 9 && ok; ++j)
        for (int i = 2; i <= 4 && ok; ++i) {
          const CellIndex c = to_global_cell(p, i, j);
          if (!part.contains(c.i, c.j)) {
            ok = false;
            break;
          }
          const int l = part.label(c.i, c.j);
          if (j <= 3 && l == 2) ok = false;
          if (j >= 8 && l == 1) ok = false;
        }
      if (!ok) continue;
      bool clean = true;
      for (auto [i, j] : {std::pair{3, 2}, {3, 3}, {4, 3}}) {
        const CellIndex c = to_global_cell(p, i, j);
        if (part.label(c.i, c.j) != 1) clean = false;
      }
      for (auto [i, j] : {std::pair{3, 9}, {3, 8}, {4, 8}}) {
        const CellIndex c = to_global_cell(p, i, j);
        if (part.label(c.i, c.j) != 2) clean = false;
      }
      (clean ? strict : relaxed).push_back(make_window(g, anchor, p, anchor_column));
    }
  }
  strict.insert(strict.end(), relaxed.begin(), relaxed.end());
  return strict;
}

}  // namespace

EdgeWindow build_window(const CellPartition& part, const CellGrid& g, CellIndex anchor, const WindowOptions& options) {
  auto windows = candidate_windows(part, g, anchor, options);
  if (windows.empty())
    throw Error(ErrorCode::NoValidWindow,
                "no 3x8 placement around (" + std::to_string(anchor.i) + "," + std::to_string(anchor.j) + ")");
  return windows.front();
}

// ---------------------------------------------------------------------------
// Local model

std::pair<LinearPiece, LinearPiece> fit_linear_pieces(const EdgeWindow& w) {
  // cell averages of a linear function equal its value at the cell centre
  const double h = w.h;
  LinearPiece lower;
  lower.beta = (w.cell(3, 3) - w.cell(3, 2)) / h;
  lower.alpha = (w.cell(4, 3) - w.cell(3, 3)) / h;
  lower.gamma = w.cell(3, 3) - lower.alpha * 2.5 * h - lower.beta * 2.5 * h;
  LinearPiece upper;
  upper.beta = (w.cell(3, 9) - w.cell(3, 8)) / h;
  upper.alpha = (w.cell(4, 8) - w.cell(3, 8)) / h;
  upper.gamma = w.cell(3, 8) - upper.alpha * 2.5 * h - upper.beta * 7.5 * h;
  return {lower, upper};
}

namespace {

// integral of X^k over [i-1, i]
double monomial(int i, int k) { return (std::pow(i, k + 1) - std::pow(i - 1, k + 1)) / (k + 1); }

}  // namespace

QuadraticSystem assemble_quadratic_system(double h, const LinearPiece& lower, const LinearPiece& upper,
                                          const std::array<double, 3>& column_sums) {
  QuadraticSystem s;
  s.h = h;
  s.alpha = (lower.alpha - upper.alpha) * h;
  s.beta = (lower.beta - upper.beta) * h;
  s.gamma = lower.gamma - upper.gamma;
  for (int i = 2; i <= 4; ++i) s.upper_term[i - 2] = 4.0 * upper((i - 0.5) * h, 5.0 * h);
  s.target = column_sums;
  double hmax = 0.0;
  for (int i = 2; i <= 4; ++i)
    for (int k = 0; k <= 4; ++k) hmax = std::max(hmax, std::abs(s.beta) * monomial(i, k));
  s.hessian_bound = hmax;
  return s;
}

QuadraticSystem assemble_quadratic_system(const EdgeWindow& w, const LinearPiece& lower, const LinearPiece& upper) {
  std::array<double, 3> sums{};
  for (int i = 2; i <= 4; ++i) sums[i - 2] = w.cell(i, 4) + w.cell(i, 5) + w.cell(i, 6) + w.cell(i, 7);
  return assemble_quadratic_system(w.h, lower, upper, sums);
}

std::array<double, 3> QuadraticSystem::value(const std::array<double, 3>& v) const {
  const double A = v[0], b = v[1], c = v[2];
  std::array<double, 3> out{};
  for (int i = 2; i <= 4; ++i) {
    const double m0 = monomial(i, 0), m1 = monomial(i, 1), m2 = monomial(i, 2), m3 = monomial(i, 3),
                 m4 = monomial(i, 4);
    const double lin = alpha * A * m3 + (alpha * b + gamma * A) * m2 + (alpha * (c - 3.0) + gamma * b) * m1 +
                       gamma * (c - 3.0) * m0;
    const double quad = 0.5 * beta *
                        (A * A * m4 + 2.0 * A * b * m3 + (b * b + 2.0 * A * c) * m2 + 2.0 * b * c * m1 +
                         (c * c - 9.0) * m0);
    out[i - 2] = lin + quad + upper_term[i - 2];
  }
  return out;
}

std::array<double, 9> QuadraticSystem::jacobian(const std::array<double, 3>& v) const {
  const double A = v[0], b = v[1], c = v[2];
  std::array<double, 9> J{};
  for (int i = 2; i <= 4; ++i) {
    const double m0 = monomial(i, 0), m1 = monomial(i, 1), m2 = monomial(i, 2), m3 = monomial(i, 3),
                 m4 = monomial(i, 4);
    const int r = (i - 2) * 3;
    J[r + 0] = alpha * m3 + gamma * m2 + beta * (A * m4 + b * m3 + c * m2);
    J[r + 1] = alpha * m2 + gamma * m1 + beta * (A * m3 + b * m2 + c * m1);
    J[r + 2] = alpha * m1 + gamma * m0 + beta * (A * m2 + b * m1 + c * m0);
  }
  return J;
}

double QuadraticSystem::jacobian_det(const std::array<double, 3>& v) const {
  const auto J = jacobian(v);
  return J[0] * (J[4] * J[8] - J[5] * J[7]) - J[1] * (J[3] * J[8] - J[5] * J[6]) + J[2] * (J[3] * J[7] - J[4] * J[6]);
}

NewtonResult newton_solve(const QuadraticSystem& system, std::array<double, 3> init, double tol, int max_iters) {
  // jump of the linear model at the window centre sets the determinant scale
  const double scale = std::abs(system.gamma + system.alpha * 2.5 + system.beta * 5.0);
  const double det_floor = 1e-14 * std::pow(std::max(1.0, scale), 3);
  auto residual_of = [&](const std::array<double, 3>& v) {
    const auto q = system.value(v);
    double r = 0.0;
    for (int k = 0; k < 3; ++k) r = std::max(r, std::abs(q[k] - system.target[k]));
    return r;
  };

  NewtonResult out;
  std::array<double, 3> v = init;
  double last = residual_of(v);
  int stalls = 0;
  for (int it = 1; it <= max_iters; ++it) {
    const auto J = system.jacobian(v);
    if (std::abs(system.jacobian_det(v)) <= det_floor)
      throw Error(ErrorCode::SingularJacobian, "Jacobian determinant vanishes (no jump across the edge?)");
    const auto q = system.value(v);
    Eigen::Matrix3d M;
    M << J[0], J[1], J[2], J[3], J[4], J[5], J[6], J[7], J[8];
    const Eigen::Vector3d rhs(q[0] - system.target[0], q[1] - system.target[1], q[2] - system.target[2]);
    const Eigen::Vector3d delta = M.partialPivLu().solve(rhs);
    for (int k = 0; k < 3; ++k) v[k] -= delta[k];
    out.iterations = it;
    const double r = residual_of(v);
    if (delta.lpNorm<Eigen::Infinity>() <= tol) {
      out.v = v;
      out.residual = r;
      return out;
    }
    if (r >= last && r > 1e-13 * std::max(1.0, scale)) {
      if (++stalls >= 3) throw Error(ErrorCode::NewtonDivergence, "residual failed to decrease for 3 iterations");
    } else {
      stalls = 0;
    }
    last = r;
  }
  throw Error(ErrorCode::NewtonDivergence, "no convergence in " + std::to_string(max_iters) + " iterations");
}

std::array<double, 3> initial_guess(const CellPartition& part, const EdgeWindow& w) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int j = 2; j <= 9; ++j)
    for (int i = 2; i <= 4; ++i) {
      const CellIndex c = w.global_cell(i, j);
      if (part.label(c.i, c.j) != 0) continue;
      const double X = i - 0.5, Y = j - 0.5;
      sx += X, sy += Y, sxx += X * X, sxy += X * Y;
      ++count;
    }
  if (count == 0) return {0.0, 0.0, 5.0};
  const double var = sxx - sx * sx / count;
  if (var <= 1e-12) return {0.0, 0.0, sy / count};
  const double b = (sxy - sx * sy / count) / var;
  return {0.0, b, sy / count - b * sx / count};
}

namespace {

// Average of the model (lower below q, upper above) over local cell (i,j).
double model_cell_average(const QuadraticArc& arc, int i, int j) {
  const double h = arc.h;
  const double y0 = (j - 1) * h, y1 = j * h;
  const auto& rule = gauss_legendre(8);
  constexpr int kPanels = 4;
  double sum = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double xa = (i - 1) * h + p * h / kPanels, xb = xa + h / kPanels;
    const double c = 0.5 * (xa + xb), r = 0.5 * (xb - xa);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double x = c + r * rule.nodes[q];
      const double ys = std::clamp(arc.q(x), y0, y1);
      auto integral = [x](const LinearPiece& L, double ya, double yb) {
        return (L.alpha * x + L.gamma) * (yb - ya) + 0.5 * L.beta * (yb * yb - ya * ya);
      };
      sum += rule.weights[q] * r * (integral(arc.lower, y0, ys) + integral(arc.upper, ys, y1));
    }
  }
  return sum / (h * h);
}

}  // namespace

QuadraticArc solve_window(const CellPartition& part, const EdgeWindow& w) {
  QuadraticArc arc;
  arc.anchor = w.anchor;
  arc.orientation = w.orientation;
  arc.frame = w.frame;
  arc.h = w.h;
  arc.x_lo = w.x_lo;
  arc.x_hi = w.x_hi;
  const auto [lower, upper] = fit_linear_pieces(w);
  arc.lower = lower;
  arc.upper = upper;
  const QuadraticSystem system = assemble_quadratic_system(w, lower, upper);
  NewtonResult sol;
  try {
    sol = newton_solve(system, initial_guess(part, w));
  } catch (const Error& e) {
    arc.reason = e.what();
    return arc;
  }
  arc.a = sol.v[0] / w.h;
  arc.b = sol.v[1];
  arc.c = sol.v[2];
  arc.newton_iters = sol.iterations;
  arc.residual = sol.residual;

  // the model assumes the curve stays strictly inside rows 4..7 over the window
  std::vector<double> xs{1.0, 4.0};
  if (sol.v[0] != 0.0) {
    const double vertex = -sol.v[1] / (2.0 * sol.v[0]);
    if (vertex > 1.0 && vertex < 4.0) xs.push_back(vertex);
  }
  for (double X : xs) {
    const double Y = sol.v[0] * X * X + sol.v[1] * X + sol.v[2];
    if (!(Y > 3.0 && Y < 7.0)) {
      arc.reason = "quadratic leaves the band rows 4..7";
      return arc;
    }
  }
  // model cell averages must agree with the data on the band rows
  const double jump = std::abs(system.gamma + system.alpha * 2.5 + system.beta * 5.0);
  double mismatch = 0.0;
  for (int j = 3; j <= 8; ++j)
    for (int i = 2; i <= 4; ++i) mismatch = std::max(mismatch, std::abs(model_cell_average(arc, i, j) - w.cell(i, j)));
  if (mismatch > 0.1 * jump) {
    arc.reason = "model cell averages disagree with the data (" + std::to_string(mismatch / jump) + " of the jump)";
    return arc;
  }
  arc.valid = true;
  return arc;
}

ArcChain chain_arcs(const CellPartition& part, const CellGrid& g, const ChainOptions& options) {
  if (options.stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  ArcChain chain;
  std::set<std::tuple<int, int, double, double, double, double>> seen;
  for (std::size_t k = 0; k < part.u0.size(); k += static_cast<std::size_t>(options.stride)) {
    const CellIndex anchor = part.u0[k];
    std::vector<EdgeWindow> windows;
    try {
      windows = candidate_windows(part, g, anchor, {});
    } catch (const Error& e) {
      chain.skipped.push_back(e.what());
      continue;
    }
    if (windows.empty()) {
      chain.skipped.push_back("no valid window at (" + std::to_string(anchor.i) + "," + std::to_string(anchor.j) + ")");
      continue;
    }
    std::string last_reason;
    bool done = false;
    for (const auto& w : windows) {
      const auto key = std::make_tuple(static_cast<int>(w.orientation), w.reflected ? 1 : 0, w.frame.t[0], w.frame.t[1],
                                       w.x_lo, w.x_hi);
      if (seen.count(key)) {
        done = true;
        break;
      }
      QuadraticArc arc = solve_window(part, w);
      if (arc.valid) {
        seen.insert(key);
        chain.arcs.push_back(arc);
        done = true;
        break;
      }
      last_reason = arc.reason;
    }
    if (!done) {
      chain.skipped.push_back("(" + std::to_string(anchor.i) + "," + std::to_string(anchor.j) + "): " + last_reason);
      log::debug("chain_arcs: skipped anchor (" + std::to_string(anchor.i) + "," + std::to_string(anchor.j) +
                 "): " + last_reason);
    }
  }
  if (chain.arcs.empty()) throw Error(ErrorCode::EmptyChain, "no local arc survived");
  const int samples = std::max(options.samples_per_arc, 16);
  for (const auto& arc : chain.arcs)
    for (const auto& p : arc.sample(samples)) chain.points.push_back(p);
  return chain;
}

}  // namespace cellrecon
