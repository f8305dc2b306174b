#include "cellrecon/signature.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "cellrecon/error.hpp"
#include "cellrecon/log.hpp"

namespace cellrecon {

SignatureField::SignatureField(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  if (n < 3 || values_.size() != static_cast<std::size_t>(n - 2) * (n - 2))
    throw Error(ErrorCode::InvalidArgument, "signature needs (n-2)^2 values");
}

double SignatureField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SignatureField compute_signature(const CellGrid& g) {
  const int n = g.n();
  if (n < 4) throw Error(ErrorCode::InvalidArgument, "signature needs n >= 4");
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(n - 2) * (n - 2));
  for (int j = 2; j <= n - 1; ++j)
    for (int i = 2; i <= n - 1; ++i)
      s.push_back(g(i - 1, j) + g(i, j - 1) - 4.0 * g(i, j) + g(i + 1, j) + g(i, j + 1));
  return SignatureField(n, std::move(s));
}

double estimate_delta(const CellGrid& g, double hc_prime) {
  if (!(hc_prime > 0.0 && hc_prime < 1.0)) throw Error(ErrorCode::InvalidArgument, "hc_prime must lie in (0,1)");
  const double cut = std::sqrt(hc_prime);
  const int n = g.n();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double d) {
    d = std::abs(d);
    if (d > cut) best = std::min(best, d);
  };
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      if (i < n) consider(g(i + 1, j) - g(i, j));
      if (j < n) consider(g(i, j + 1) - g(i, j));
    }
  if (!std::isfinite(best))
    throw Error(ErrorCode::NoJumpDetected, "no neighbour difference exceeds sqrt(hc') = " + std::to_string(cut));
  return best;
}

namespace {

constexpr int kUnset = -1;
constexpr int kExcluded = -2;

}  // namespace

CellPartition detect(const CellGrid& g, const SignatureField& sig, ThresholdMode mode, double param) {
  const int n = g.n();
  if (sig.n() != n) throw Error(ErrorCode::InvalidArgument, "signature does not match grid");
  double threshold = 0.0;
  if (mode == ThresholdMode::Theoretical) {
    if (!(param > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta* must be positive");
    threshold = 0.5 * param;
  } else {
    if (!(param > 0.0 && param < 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in (0,1)");
    threshold = param * sig.max_abs();
  }

  auto idx = [n](int i, int j) { return static_cast<std::size_t>(j - 1) * n + (i - 1); };
  std::vector<int> label(static_cast<std::size_t>(n) * n, kUnset);
  const bool any_signal = sig.max_abs() > 0.0;
  for (int j = 2; j <= n - 1; ++j)
    for (int i = 2; i <= n - 1; ++i)
      if (any_signal && std::abs(sig(i, j)) >= threshold) label[idx(i, j)] = 0;

  // Ring cells carry no signature.  Where the band reaches the ring they are
  // held back from the flood fill so the two sides do not leak into each
  // other along the boundary, then attached to the adjacent side whose value
  // is closest.
  auto inward_is_u0 = [&](int i, int j) {
    const int ii = std::clamp(i, 2, n - 1), jj = std::clamp(j, 2, n - 1);
    return label[idx(ii, jj)] == 0;
  };
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      const bool ring = i == 1 || j == 1 || i == n || j == n;
      if (ring && inward_is_u0(i, j)) label[idx(i, j)] = kExcluded;
    }

  // 4-connected components of the remaining cells
  std::vector<int> comp(static_cast<std::size_t>(n) * n, -1);
  std::vector<std::size_t> comp_size;
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      if (label[idx(i, j)] != kUnset || comp[idx(i, j)] >= 0) continue;
      const int id = static_cast<int>(comp_size.size());
      std::size_t size = 0;
      std::deque<CellIndex> queue{{i, j}};
      comp[idx(i, j)] = id;
      while (!queue.empty()) {
        auto c = queue.front();
        queue.pop_front();
        ++size;
        for (int d = 0; d < 4; ++d) {
          const int a = c.i + di[d], b = c.j + dj[d];
          if (a < 1 || a > n || b < 1 || b > n) continue;
          if (label[idx(a, b)] != kUnset || comp[idx(a, b)] >= 0) continue;
          comp[idx(a, b)] = id;
          queue.push_back({a, b});
        }
      }
      comp_size.push_back(size);
    }

  // Pockets of a few cells trapped inside a thick band belong to the band.
  const std::size_t pocket = std::max<std::size_t>(4, static_cast<std::size_t>(n) * n / 400);
  std::vector<int> keep;
  for (std::size_t c = 0; c < comp_size.size(); ++c)
    if (comp_size[c] > pocket || comp_size.size() <= 2) keep.push_back(static_cast<int>(c));
  if (keep.size() != comp_size.size())
    log::info("detect: absorbed " + std::to_string(comp_size.size() - keep.size()) + " small pockets into U0");
  if (keep.size() != 2)
    throw Error(ErrorCode::PartitionFailure,
                "flood fill produced " + std::to_string(keep.size()) + " side components (expected 2)");

  // u1 seeds from (1,1), else the first non-band cell in row-major order
  int first = -1;
  for (int j = 1; j <= n && first < 0; ++j)
    for (int i = 1; i <= n && first < 0; ++i) {
      const int c = comp[idx(i, j)];
      if (c >= 0 && std::find(keep.begin(), keep.end(), c) != keep.end()) first = c;
    }
  const int side1 = first;
  const int side2 = keep[0] == side1 ? keep[1] : keep[0];

  for (std::size_t k = 0; k < label.size(); ++k) {
    if (label[k] != kUnset) continue;
    label[k] = comp[k] == side1 ? 1 : (comp[k] == side2 ? 2 : 0);
  }

  // attach held-back ring cells
  bool progress = true;
  while (progress) {
    progress = false;
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n; ++i) {
        if (label[idx(i, j)] != kExcluded) continue;
        int best_label = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int d = 0; d < 4; ++d) {
          const int a = i + di[d], b = j + dj[d];
          if (a < 1 || a > n || b < 1 || b > n) continue;
          const int l = label[idx(a, b)];
          if (l != 1 && l != 2) continue;
          const double diff = std::abs(g(a, b) - g(i, j));
          if (diff < best) best = diff, best_label = l;
        }
        if (best_label > 0) {
          label[idx(i, j)] = best_label;
          progress = true;
        }
      }
  }
  for (auto& l : label)
    if (l == kExcluded) l = 0;

  CellPartition part;
  part.n = n;
  part.threshold_mode = mode;
  part.threshold_value = threshold;
  part.delta_est = mode == ThresholdMode::Theoretical ? param : 2.0 * threshold;
  part.labels = label;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      switch (label[idx(i, j)]) {
        case 0: part.u0.push_back({i, j}); break;
        case 1: part.u1.push_back({i, j}); break;
        default: part.u2.push_back({i, j}); break;
      }
    }
  return part;
}

LemmaReport check_lemma_bounds(const CellGrid& g, const SignatureField& sig, const TestFunction& f) {
  LemmaReport report;
  const int n = g.n();
  const double h = g.h();
  const double far_bound = f.second_derivative_bound * h * h;
  for (int j = 2; j <= n - 1; ++j)
    for (int i = 2; i <= n - 1; ++i) {
      const double s = std::abs(sig(i, j));
      const Point2 p = g.center(i, j);
      if (!f.curve) {
        ++report.far_checked;
        if (s > far_bound * (1.0 + 1e-12) + 1e-14) {
          ++report.far_violations;
          report.violations.push_back({{i, j}, s, far_bound, true});
        }
        continue;
      }
      const Point2 c = f.curve->closest_point(p);
      const double d = distance(p, c);
      // lower bound on the distance from the whole cell to the curve
      const double cell_dist = d - h * std::sqrt(0.5);
      if (cell_dist >= h) {
        ++report.far_checked;
        if (s > far_bound * (1.0 + 1e-12) + 1e-14) {
          ++report.far_violations;
          report.violations.push_back({{i, j}, s, far_bound, true});
        }
      } else if (d > 0.5 * h && d <= h) {
        ++report.near_checked;
        const double jump = std::abs(f.piece1(c.x, c.y) - f.piece2(c.x, c.y));
        if (s < 0.5 * jump) {
          ++report.near_violations;
          report.violations.push_back({{i, j}, s, 0.5 * jump, false});
        }
      }
    }
  return report;
}

}  // namespace cellrecon
