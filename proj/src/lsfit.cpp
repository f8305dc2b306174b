#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cellrecon/error.hpp"
#include "cellrecon/log.hpp"
#include "cellrecon/reconstruct.hpp"

namespace cellrecon {

namespace {

constexpr int kDegree = 3;

// Integrals of every 1D basis function over [a, b], accumulated into `out`
// (indexed k - kmin).  Split at knots; 3-point Gauss is exact per cubic piece.
void basis_integrals(const TensorSpline& basis, double a, double b, std::vector<double>& out) {
  if (!(b > a)) return;
  const auto& rule = gauss_legendre(3);
  const double d = basis.knot_spacing();
  std::vector<double> cuts{a};
  for (double x = (std::floor(a / d) + 1.0) * d; x < b; x += d) cuts.push_back(x);
  cuts.push_back(b);
  double values[kDegree + 1];
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double c = 0.5 * (cuts[s] + cuts[s + 1]), r = 0.5 * (cuts[s + 1] - cuts[s]);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const int first = basis.axis_values(c + r * rule.nodes[q], values);
      for (int m = 0; m <= kDegree; ++m) {
        const int k = first + m - basis.kmin();
        if (k >= 0 && k < basis.count()) out[static_cast<std::size_t>(k)] += rule.weights[q] * r * values[m];
      }
    }
  }
}

// Sign changes of f on [lo, hi], located by sampling and bisection.
template <class F>
std::vector<double> roots_on(F&& f, double lo, double hi, int samples = 9) {
  std::vector<double> roots;
  double xa = lo, fa = f(lo);
  for (int s = 1; s <= samples; ++s) {
    const double xb = lo + (hi - lo) * s / samples, fb = f(xb);
    if ((fa >= 0.0) != (fb >= 0.0)) {
      double a = xa, b = xb;
      const bool a_pos = fa >= 0.0;
      for (int it = 0; it < 100 && b - a > 1e-16; ++it) {
        const double m = 0.5 * (a + b);
        if ((f(m) >= 0.0) == a_pos) a = m;
        else b = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    xa = xb, fa = fb;
  }
  return roots;
}

struct CrossedCell {
  const TensorSpline& s;
  const TensorSpline& basis;
  double y0, y1;
  int count;

  // inner integrals per side along the vertical line at x
  void inner(double x, std::vector<double>& side1, std::vector<double>& side2) const {
    std::fill(side1.begin(), side1.end(), 0.0);
    std::fill(side2.begin(), side2.end(), 0.0);
    auto g = [&](double y) { return s(x, y); };
    auto cuts = roots_on(g, y0, y1);
    cuts.insert(cuts.begin(), y0);
    cuts.push_back(y1);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      basis_integrals(basis, cuts[k], cuts[k + 1], g(mid) >= 0.0 ? side1 : side2);
    }
  }
};

}  // namespace

PiecewiseReconstruction fit_cell_average_ls(const CellGrid& g, const std::optional<ImplicitCurve>& curve,
                                            double knot_spacing, const LsOptions& options) {
  if (!(knot_spacing > 0.0) || knot_spacing > 1.0) throw Error(ErrorCode::InvalidArgument, "bad knot spacing");
  if (options.lambda < 0.0 || options.smoothing < 0.0)
    throw Error(ErrorCode::InvalidArgument, "penalty weights must be >= 0");
  const int n = g.n();
  const double h = g.h();
  const double d = knot_spacing;
  const double half = 0.5 * (kDegree + 1);
  const int kmin = static_cast<int>(std::floor(-half)) + 1;
  const int kmax = static_cast<int>(std::ceil(1.0 / d + half)) - 1;
  const int count = kmax - kmin + 1;
  const TensorSpline basis(kDegree, d, 0.0, kmin, count, std::vector<double>(static_cast<std::size_t>(count) * count));

  CellValidity validity;
  if (curve) {
    validity = classify_cells(curve->spline, n);
  } else {
    validity.n = n;
    validity.side1.assign(static_cast<std::size_t>(n) * n, 1);
    validity.side2.assign(static_cast<std::size_t>(n) * n, 0);
  }

  // column id for (side, k, l), created on first use
  std::map<std::tuple<int, int, int>, int> columns;
  auto column = [&](int side, int k, int l) {
    auto [it, inserted] = columns.try_emplace({side, k, l}, static_cast<int>(columns.size()));
    return it->second;
  };
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> ix(static_cast<std::size_t>(count)), iy(static_cast<std::size_t>(count));
  const double inv_area = 1.0 / (h * h);

  auto add_product = [&](int row, int side, const std::vector<double>& a, const std::vector<double>& b, double scale) {
    for (int l = 0; l < count; ++l) {
      if (b[static_cast<std::size_t>(l)] == 0.0) continue;
      for (int k = 0; k < count; ++k) {
        const double v = a[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(l)] * scale;
        if (v != 0.0) triplets.emplace_back(row, column(side, k + kmin, l + kmin), v);
      }
    }
  };

  int crossed = 0;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      const int row = (j - 1) * n + (i - 1);
      const double x0 = (i - 1) * h, x1 = i * h, y0 = (j - 1) * h, y1 = j * h;
      const int side = validity.valid(1, i, j) ? 1 : (validity.valid(2, i, j) ? 2 : 0);
      if (side != 0) {
        std::fill(ix.begin(), ix.end(), 0.0);
        std::fill(iy.begin(), iy.end(), 0.0);
        basis_integrals(basis, x0, x1, ix);
        basis_integrals(basis, y0, y1, iy);
        add_product(row, side, ix, iy, inv_area);
        continue;
      }
      ++crossed;
      // crossed cell: outer adaptive Gauss in x over panels split at knots
      // and where the curve meets the bottom/top edges
      const CrossedCell cell{curve->spline, basis, y0, y1, count};
      std::vector<double> cuts{x0};
      for (double x = (std::floor(x0 / d) + 1.0) * d; x < x1; x += d) cuts.push_back(x);
      for (double ye : {y0, y1})
        for (double r : roots_on([&](double x) { return curve->spline(x, ye); }, x0, x1)) cuts.push_back(r);
      cuts.push_back(x1);
      std::sort(cuts.begin(), cuts.end());

      const auto& rule = gauss_legendre(8);
      const int lo_k = std::max(0, static_cast<int>(std::floor((x0) / d - half)) - kmin);
      const int hi_k = std::min(count - 1, static_cast<int>(std::ceil(x1 / d + half)) - kmin);
      const int width = hi_k - lo_k + 1;
      using Block = Eigen::MatrixXd;  // rows k - lo_k, cols l; two sides stacked
      std::vector<double> s1(static_cast<std::size_t>(count)), s2(static_cast<std::size_t>(count));
      double bx[kDegree + 1];
      auto panel = [&](double a, double b) {
        Block out = Block::Zero(2 * width, count);
        const double c = 0.5 * (a + b), r = 0.5 * (b - a);
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
          const double x = c + r * rule.nodes[q];
          cell.inner(x, s1, s2);
          const int first = basis.axis_values(x, bx) - kmin;
          for (int m = 0; m <= kDegree; ++m) {
            const int k = first + m - lo_k;
            if (k < 0 || k >= width || bx[m] == 0.0) continue;
            const double wgt = rule.weights[q] * r * bx[m];
            for (int l = 0; l < count; ++l) {
              out(k, l) += wgt * s1[static_cast<std::size_t>(l)];
              out(width + k, l) += wgt * s2[static_cast<std::size_t>(l)];
            }
          }
        }
        return out;
      };
      Block total = Block::Zero(2 * width, count);
      const double tol = 1e-13 * h * h;
      auto adapt = [&](auto&& self, double a, double b, const Block& whole, int depth) -> void {
        const double m = 0.5 * (a + b);
        const Block left = panel(a, m), right = panel(m, b);
        const Block sum = left + right;
        if (depth >= 24 || (sum - whole).cwiseAbs().maxCoeff() <= tol) {
          total += sum;
          return;
        }
        self(self, a, m, left, depth + 1);
        self(self, m, b, right, depth + 1);
      };
      for (std::size_t p = 0; p + 1 < cuts.size(); ++p)
        if (cuts[p + 1] > cuts[p]) adapt(adapt, cuts[p], cuts[p + 1], panel(cuts[p], cuts[p + 1]), 0);

      for (int sd = 1; sd <= 2; ++sd)
        for (int k = 0; k < width; ++k)
          for (int l = 0; l < count; ++l) {
            const double v = total((sd - 1) * width + k, l) * inv_area;
            if (v != 0.0) triplets.emplace_back(row, column(sd, lo_k + k + kmin, l + kmin), v);
          }
    }

  const int rows = n * n, cols = static_cast<int>(columns.size());
  Eigen::SparseMatrix<double> A(rows, cols);
  A.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd f(rows);
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) f[(j - 1) * n + (i - 1)] = g(i, j);

  Eigen::SparseMatrix<double> N = A.transpose() * A;
  double maxdiag = 0.0;
  for (int c = 0; c < cols; ++c) maxdiag = std::max(maxdiag, N.coeff(c, c));
  {
    // second differences along both axes within each side's coefficient set
    // only near the cut: a basis function is cut when its support meets a
    // cell that is not valid for its side
    std::set<std::tuple<int, int, int>> cut;
    if (curve) {
      for (int j = 1; j <= n; ++j)
        for (int i = 1; i <= n; ++i)
          for (int side = 1; side <= 2; ++side) {
            if (validity.valid(side, i, j)) continue;
            const int k0 = static_cast<int>(std::floor((i - 1) * h / d - half)) + 1;
            const int k1 = static_cast<int>(std::ceil(i * h / d + half)) - 1;
            const int l0 = static_cast<int>(std::floor((j - 1) * h / d - half)) + 1;
            const int l1 = static_cast<int>(std::ceil(j * h / d + half)) - 1;
            for (int l = l0; l <= l1; ++l)
              for (int k = k0; k <= k1; ++k) cut.insert({side, k, l});
          }
    }
    std::vector<Eigen::Triplet<double>> pen;
    int prow = 0;
    for (const auto& [key, col] : columns) {
      const auto [side, k, l] = key;
      for (auto [dk, dl] : {std::pair{1, 0}, {0, 1}}) {
        const std::tuple<int, int, int> lo_key{side, k - dk, l - dl}, hi_key{side, k + dk, l + dl};
        if (!cut.count(key) && !cut.count(lo_key) && !cut.count(hi_key)) continue;
        const auto lo = columns.find(lo_key), hi = columns.find(hi_key);
        if (lo == columns.end() || hi == columns.end()) continue;
        pen.emplace_back(prow, lo->second, 1.0);
        pen.emplace_back(prow, col, -2.0);
        pen.emplace_back(prow, hi->second, 1.0);
        ++prow;
      }
    }
    Eigen::SparseMatrix<double> D(prow, cols);
    D.setFromTriplets(pen.begin(), pen.end());
    N += (options.smoothing * maxdiag) * (D.transpose() * D);
    for (int c = 0; c < cols; ++c) N.coeffRef(c, c) += options.lambda * maxdiag;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(N);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::SingularSystem, "normal equations of the cell-average fit are singular");
  Eigen::VectorXd x = solver.solve(A.transpose() * f);
  if (!x.allFinite()) throw Error(ErrorCode::SingularSystem, "cell-average fit produced non-finite coefficients");

  std::vector<double> c1(static_cast<std::size_t>(count) * count, 0.0), c2(c1.size(), 0.0);
  for (const auto& [key, col] : columns) {
    const auto [side, k, l] = key;
    auto& target = side == 1 ? c1 : c2;
    target[static_cast<std::size_t>(l - kmin) * count + (k - kmin)] = x[col];
  }

  PiecewiseReconstruction r;
  r.method = ReconMethod::LeastSquares;
  r.curve = curve;
  r.validity = validity;
  r.spline1 = TensorSpline(kDegree, d, 0.0, kmin, count, std::move(c1));
  if (curve) r.spline2 = TensorSpline(kDegree, d, 0.0, kmin, count, std::move(c2));
  r.residual = (A * x - f).norm();
  log::debug("fit_cell_average_ls: " + std::to_string(cols) + " unknowns, " + std::to_string(crossed) +
             " crossed cells, residual " + std::to_string(r.residual));
  return r;
}

}  // namespace cellrecon
