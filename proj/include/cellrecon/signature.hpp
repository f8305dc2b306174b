#pragma once

#include <vector>

#include "cellrecon/grid.hpp"

namespace cellrecon {

/// Discrete-Laplacian signature s_{i,j}, defined for 2 <= i,j <= n-1.
class SignatureField {
 public:
  SignatureField(int n, std::vector<double> values);

  int n() const noexcept { return n_; }
  double operator()(int i, int j) const {
    return values_[static_cast<std::size_t>(j - 2) * (n_ - 2) + static_cast<std::size_t>(i - 2)];
  }
  bool defined(int i, int j) const noexcept { return i >= 2 && i <= n_ - 1 && j >= 2 && j <= n_ - 1; }
  double max_abs() const;

 private:
  int n_;
  std::vector<double> values_;
};

enum class ThresholdMode { Theoretical, Relative };

/// Per-cell labels: 0 = irregular (near the curve), 1 and 2 the two sides.
struct CellPartition {
  int n = 0;
  std::vector<CellIndex> u0, u1, u2;
  double delta_est = 0.0;
  ThresholdMode threshold_mode = ThresholdMode::Theoretical;
  double threshold_value = 0.0;
  std::vector<int> labels;  // row-major, values in {0,1,2}

  int label(int i, int j) const { return labels[static_cast<std::size_t>(j - 1) * n + (i - 1)]; }
  bool contains(int i, int j) const { return i >= 1 && i <= n && j >= 1 && j <= n; }
};

SignatureField compute_signature(const CellGrid& g);

/// Minimum 4-neighbour difference exceeding sqrt(hc_prime); throws NoJumpDetected.
double estimate_delta(const CellGrid& g, double hc_prime = 0.04);

/// `param` is delta* (theoretical, threshold delta*/2) or rho (relative, threshold rho*max|s|).
CellPartition detect(const CellGrid& g, const SignatureField& sig, ThresholdMode mode, double param);

struct LemmaViolation {
  CellIndex cell;
  double signature = 0.0;
  double bound = 0.0;
  bool far_field = true;
};

struct LemmaReport {
  int far_checked = 0;
  int near_checked = 0;
  int far_violations = 0;
  int near_violations = 0;
  std::vector<LemmaViolation> violations;
};

/// Checks |s| <= M h^2 away from the curve and |s| >= delta_ij/2 in the
/// window h/2 < dist(center) <= h.  Report only.
LemmaReport check_lemma_bounds(const CellGrid& g, const SignatureField& sig, const TestFunction& f);

}  // namespace cellrecon
