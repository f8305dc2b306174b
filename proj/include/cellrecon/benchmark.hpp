#pragma once

#include <limits>
#include <string>
#include <vector>

#include "cellrecon/grid.hpp"
#include "cellrecon/pipeline.hpp"

namespace cellrecon {

struct BenchmarkOptions {
  int farfield_m = 400;      // far-field sample grid is m x m
  double farfield_dist = 3.0;  // in units of h
  int graph_m_per_cell = 4;  // graph Hausdorff grid is (k n) x (k n)
  int near_samples = 10000;
  double clip_margin = 3.0;  // in units of h, for the clipped curve distance
  unsigned seed = 1;
};

/// Metrics of one pipeline run; NaN where a metric does not apply.
struct BenchmarkRow {
  static constexpr double kNone = std::numeric_limits<double>::quiet_NaN();
  int n = 0;
  double h = 0.0;
  double first_hausdorff = kNone;
  double enhanced_hausdorff = kNone;
  double enhanced_hausdorff_clipped = kNone;
  double farfield_error = kNone;
  double graph_hausdorff = kNone;
};

BenchmarkRow benchmark_row(const TestFunction& f, int n, const PipelineConfig& config,
                           const BenchmarkOptions& options = {});

/// Runs each n on its own thread; rows come back ordered as `ns`.  A failure
/// at some n is rethrown after the rows before it have been stored in `done`.
std::vector<BenchmarkRow> run_benchmark(const TestFunction& f, const std::vector<int>& ns, const PipelineConfig& config,
                                        const BenchmarkOptions& options, std::vector<BenchmarkRow>* done = nullptr);

/// log(e_prev / e_cur) / log(n_cur / n_prev); NaN if either error is missing or zero.
double observed_order(double e_prev, double e_cur, int n_prev, int n_cur);

inline constexpr const char* kBenchmarkHeader =
    "n,h,first_hausdorff,enhanced_hausdorff,enhanced_hausdorff_clipped,farfield_error,graph_hausdorff,"
    "order_first,order_enhanced,order_enhanced_clipped,order_farfield,order_graph";

/// Header plus one line per row; order columns are empty on the first row and
/// wherever the order is undefined.
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);

}  // namespace cellrecon
