#include "cellrecon/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cellrecon/error.hpp"
#include "cellrecon/log.hpp"

namespace cellrecon {

int CellValidity::count(int side) const {
  const auto& v = side == 1 ? side1 : side2;
  return static_cast<int>(std::count(v.begin(), v.end(), char{1}));
}

// ---------------------------------------------------------------------------
// Cell classification

namespace {

enum class SignClass { Pos, Neg, Mixed };

class SignCertifier {
 public:
  SignCertifier(const TensorSpline& s) : s_(s), p_(s.degree()) {
    Eigen::MatrixXd M(p_ + 1, p_ + 1);
    for (int r = 0; r <= p_; ++r) {
      const double t = p_ == 0 ? 0.0 : static_cast<double>(r) / p_;
      for (int k = 0; k <= p_; ++k) M(r, k) = binomial(p_, k) * std::pow(t, k) * std::pow(1.0 - t, p_ - k);
    }
    inverse_ = M.inverse();
    double scale = 0.0;
    for (double c : s.coefficients())
      if (std::isfinite(c)) scale = std::max(scale, std::abs(c));
    eps_ = 1e-12 * std::max(1.0, scale);
  }

  SignClass cell(double x0, double x1, double y0, double y1) const {
    const auto xs = breaks(x0, x1), ys = breaks(y0, y1);
    bool all_pos = true, all_neg = true;
    for (std::size_t a = 0; a + 1 < xs.size(); ++a)
      for (std::size_t b = 0; b + 1 < ys.size(); ++b) {
        const SignClass c = piece(xs[a], xs[a + 1], ys[b], ys[b + 1], 0);
        if (c == SignClass::Mixed) return SignClass::Mixed;
        all_pos = all_pos && c == SignClass::Pos;
        all_neg = all_neg && c == SignClass::Neg;
      }
    if (all_pos) return SignClass::Pos;
    if (all_neg) return SignClass::Neg;
    return SignClass::Mixed;
  }

 private:
  static double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  }

  // the interval split at the spline's knot lines
  std::vector<double> breaks(double lo, double hi) const {
    std::vector<double> out{lo};
    const double half = 0.5 * (p_ + 1);
    const double d = s_.knot_spacing(), o = s_.origin();
    const int first = static_cast<int>(std::floor((lo - o) / d + half)) + 1;
    for (int m = first;; ++m) {
      const double x = o + (m - half) * d;
      if (x >= hi) break;
      if (x > lo) out.push_back(x);
    }
    out.push_back(hi);
    return out;
  }

  SignClass piece(double x0, double x1, double y0, double y1, int depth) const {
    Eigen::MatrixXd V(p_ + 1, p_ + 1);
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (int r = 0; r <= p_; ++r)
      for (int c = 0; c <= p_; ++c) {
        const double x = x0 + (x1 - x0) * (p_ == 0 ? 0.0 : static_cast<double>(c) / p_);
        const double y = y0 + (y1 - y0) * (p_ == 0 ? 0.0 : static_cast<double>(r) / p_);
        V(r, c) = s_(x, y);
        vmin = std::min(vmin, V(r, c));
        vmax = std::max(vmax, V(r, c));
      }
    if (vmin < -eps_ && vmax > eps_) return SignClass::Mixed;
    // rows are y, columns x: B = inv * V * inv^T
    const Eigen::MatrixXd B = inverse_ * V * inverse_.transpose();
    if (B.minCoeff() >= -eps_) return SignClass::Pos;
    if (B.maxCoeff() <= eps_) return SignClass::Neg;
    if (depth >= kMaxDepth) return SignClass::Mixed;
    const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
    const SignClass parts[4] = {piece(x0, xm, y0, ym, depth + 1), piece(xm, x1, y0, ym, depth + 1),
                                piece(x0, xm, ym, y1, depth + 1), piece(xm, x1, ym, y1, depth + 1)};
    bool pos = true, neg = true;
    for (auto c : parts) {
      pos = pos && c == SignClass::Pos;
      neg = neg && c == SignClass::Neg;
    }
    return pos ? SignClass::Pos : (neg ? SignClass::Neg : SignClass::Mixed);
  }

  static constexpr int kMaxDepth = 5;
  const TensorSpline& s_;
  int p_;
  Eigen::MatrixXd inverse_;
  double eps_ = 0.0;
};

}  // namespace

CellValidity classify_cells(const TensorSpline& s, int n, double guard) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  if (!(guard >= 0.0)) throw Error(ErrorCode::InvalidArgument, "guard must be >= 0");
  CellValidity v;
  v.n = n;
  v.side1.assign(static_cast<std::size_t>(n) * n, 0);
  v.side2.assign(static_cast<std::size_t>(n) * n, 0);
  const SignCertifier cert(s);
  const double h = 1.0 / n, gh = guard * h;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      const auto c = cert.cell((i - 1) * h - gh, i * h + gh, (j - 1) * h - gh, j * h + gh);
      const std::size_t k = static_cast<std::size_t>(j - 1) * n + (i - 1);
      if (c == SignClass::Pos) v.side1[k] = 1;
      else if (c == SignClass::Neg) v.side2[k] = 1;
    }
  return v;
}

// ---------------------------------------------------------------------------
// Extension

namespace {

// cells whose Q_3 value may be requested on this side, one cell of slack
std::vector<char> target_cells(const CellValidity& validity, int side) {
  const int n = validity.n;
  std::vector<char> base(static_cast<std::size_t>(n) * n, 0), out(base.size(), 0);
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) base[static_cast<std::size_t>(j - 1) * n + (i - 1)] = !validity.valid(3 - side, i, j);
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      bool any = false;
      for (int b = std::max(1, j - 1); b <= std::min(n, j + 1) && !any; ++b)
        for (int a = std::max(1, i - 1); a <= std::min(n, i + 1); ++a)
          if (base[static_cast<std::size_t>(b - 1) * n + (a - 1)]) {
            any = true;
            break;
          }
      out[static_cast<std::size_t>(j - 1) * n + (i - 1)] = any;
    }
  return out;
}

// reach of Q_3 around a cell: basis index within 2, window radius 2
constexpr int kBasisReach = 2;
constexpr int kWindowReach = 2;

std::vector<char> dilate_into_extended(const std::vector<char>& cells, int n, int pad, int radius) {
  const int w = n + 2 * pad;
  std::vector<char> out(static_cast<std::size_t>(w) * w, 0);
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      if (!cells[static_cast<std::size_t>(j - 1) * n + (i - 1)]) continue;
      for (int b = std::max(1 - pad, j - radius); b <= std::min(n + pad, j + radius); ++b)
        for (int a = std::max(1 - pad, i - radius); a <= std::min(n + pad, i + radius); ++a)
          out[static_cast<std::size_t>(b - 1 + pad) * w + (a - 1 + pad)] = 1;
    }
  return out;
}

}  // namespace

std::vector<char> stencil_need(const CellValidity& validity, int side, int pad) {
  return dilate_into_extended(target_cells(validity, side), validity.n, pad, kBasisReach + kWindowReach);
}

ExtendedCellGrid extend_side(const CellGrid& g, const std::vector<char>& valid, const std::vector<char>& need, int pad) {
  const int n = g.n();
  const int w = n + 2 * pad;
  if (valid.size() != static_cast<std::size_t>(n) * n || need.size() != static_cast<std::size_t>(w) * w)
    throw Error(ErrorCode::InvalidArgument, "extend_side: mask sizes do not match the grid");
  ExtendedCellGrid ext(n, pad);
  int valid_count = 0;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i)
      if (valid[static_cast<std::size_t>(j - 1) * n + (i - 1)]) {
        FillProvenance p;
        p.source = FillProvenance::Source::Original;
        ext.set(i, j, g(i, j), p);
        ++valid_count;
      }

  std::vector<CellIndex> todo;
  for (int j = 1 - pad; j <= n + pad; ++j)
    for (int i = 1 - pad; i <= n + pad; ++i)
      if (need[static_cast<std::size_t>(j - 1 + pad) * w + (i - 1 + pad)] && !ext.known(i, j)) todo.push_back({i, j});
  if (todo.empty()) return ext;
  if (valid_count == 0) {
    throw Error(ErrorCode::InsufficientValidRun,
                "no valid cell on this side to extend from (cell " + std::to_string(todo.front().i) + "," +
                    std::to_string(todo.front().j) + ")");
  }

  constexpr int kDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  int pass = 0;
  for (int run = 4; run >= 1 && !todo.empty(); --run) {
    for (bool progress = true; progress && !todo.empty(); ++pass) {
      progress = false;
      const ExtendedCellGrid snapshot = ext;
      std::vector<CellIndex> remaining;
      for (const auto cell : todo) {
        int best_dir = -1, best_t = std::numeric_limits<int>::max();
        for (int d = 0; d < 4; ++d) {
          const int dx = kDirs[d][0], dy = kDirs[d][1];
          for (int t = 1; t < best_t; ++t) {
            const int a = cell.i + dx * t, b = cell.j + dy * t;
            if (!snapshot.in_range(a, b)) break;
            bool ok = true;
            for (int q = 0; q < run && ok; ++q) ok = snapshot.known(cell.i + dx * (t + q), cell.j + dy * (t + q));
            if (ok) {
              best_dir = d, best_t = t;
              break;
            }
          }
        }
        if (best_dir < 0) {
          remaining.push_back(cell);
          continue;
        }
        // Lagrange extrapolation to offset 0 through offsets best_t..best_t+run-1
        const int dx = kDirs[best_dir][0], dy = kDirs[best_dir][1];
        double value = 0.0;
        for (int q = 0; q < run; ++q) {
          double weight = 1.0;
          const double xq = best_t + q;
          for (int r = 0; r < run; ++r)
            if (r != q) weight *= (0.0 - (best_t + r)) / (xq - (best_t + r));
          value += weight * snapshot.value(cell.i + dx * (best_t + q), cell.j + dy * (best_t + q));
        }
        FillProvenance p;
        p.source = FillProvenance::Source::Extrapolated;
        p.direction = best_dir;
        p.run_start = best_t;
        p.degree = run - 1;
        p.pass = pass;
        ext.set(cell.i, cell.j, value, p);
        progress = true;
      }
      todo = std::move(remaining);
    }
  }
  if (!todo.empty()) {
    throw Error(ErrorCode::InsufficientValidRun, "cell (" + std::to_string(todo.front().i) + "," +
                                                     std::to_string(todo.front().j) + ") has no valid run to extend from");
  }
  return ext;
}

// ---------------------------------------------------------------------------
// Reconstruction

int PiecewiseReconstruction::side_of(double x, double y) const {
  if (!curve) return 1;
  return curve->spline(x, y) >= 0.0 ? 1 : 2;
}

namespace {

std::vector<char> required_coefficients(const std::vector<char>& targets, int n) {
  // Q_3 coefficients run over k in [-1, n+2]
  const int kmin = -1, count = n + 4;
  std::vector<char> req(static_cast<std::size_t>(count) * count, 0);
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      if (!targets[static_cast<std::size_t>(j - 1) * n + (i - 1)]) continue;
      for (int l = j - kBasisReach; l <= j + kBasisReach; ++l)
        for (int k = i - kBasisReach; k <= i + kBasisReach; ++k)
          req[static_cast<std::size_t>(l - kmin) * count + (k - kmin)] = 1;
    }
  return req;
}

}  // namespace

PiecewiseReconstruction build_reconstruction(const CellGrid& g, const std::optional<ImplicitCurve>& curve) {
  const int n = g.n();
  const int pad = kExtensionPad;
  PiecewiseReconstruction r;
  r.method = ReconMethod::Quasi;
  r.curve = curve;

  CellValidity validity;
  if (curve) {
    validity = classify_cells(curve->spline, n, kClassifyGuard);
  } else {
    validity.n = n;
    validity.side1.assign(static_cast<std::size_t>(n) * n, 1);
    validity.side2.assign(static_cast<std::size_t>(n) * n, 0);
  }
  r.validity = validity;

  for (int side = 1; side <= (curve ? 2 : 1); ++side) {
    const auto targets = target_cells(validity, side);
    const auto need = dilate_into_extended(targets, n, pad, kBasisReach + kWindowReach);
    ExtendedCellGrid ext = extend_side(g, side == 1 ? validity.side1 : validity.side2, need, pad);
    const auto required = required_coefficients(targets, n);
    TensorSpline spline = quasi_interpolant(ext, 3, &required);
    if (side == 1) {
      r.side1 = std::move(ext);
      r.spline1 = std::move(spline);
    } else {
      r.side2 = std::move(ext);
      r.spline2 = std::move(spline);
    }
  }
  log::debug("build_reconstruction: " + std::to_string(validity.count(1)) + " / " + std::to_string(validity.count(2)) +
             " valid cells");
  return r;
}

double evaluate(const PiecewiseReconstruction& r, double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw Error(ErrorCode::OutOfDomain, "evaluation point outside [0,1]^2");
  return r.side_of(x, y) == 1 ? r.spline1(x, y) : r.spline2(x, y);
}

}  // namespace cellrecon
