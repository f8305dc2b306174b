#include "cellrecon/benchmark.hpp"

#include <cmath>
#include <future>

#include "cellrecon/io.hpp"

namespace cellrecon {

BenchmarkRow benchmark_row(const TestFunction& f, int n, const PipelineConfig& config,
                           const BenchmarkOptions& options) {
  const CellGrid g = discretize(f, n);
  const PipelineResult r = run_pipeline(g, config);
  BenchmarkRow row;
  row.n = n;
  row.h = g.h();
  if (f.curve) {
    if (r.first_curve) row.first_hausdorff = curve_distance(r.first_curve->polylines, *f.curve).hausdorff;
    if (r.enhanced_curve) {
      const auto d = curve_distance(r.enhanced_curve->polylines, *f.curve, options.clip_margin * g.h());
      row.enhanced_hausdorff = d.hausdorff;
      row.enhanced_hausdorff_clipped = d.clipped_hausdorff;
    }
  }
  row.farfield_error =
      farfield_error(r.reconstruction, f, options.farfield_m, options.farfield_dist * g.h()).max_error;
  row.graph_hausdorff =
      graph_hausdorff(r.reconstruction, f, options.graph_m_per_cell * n, options.near_samples, options.seed);
  return row;
}

std::vector<BenchmarkRow> run_benchmark(const TestFunction& f, const std::vector<int>& ns, const PipelineConfig& config,
                                        const BenchmarkOptions& options, std::vector<BenchmarkRow>* done) {
  std::vector<std::future<BenchmarkRow>> jobs;
  for (int n : ns) jobs.push_back(std::async(std::launch::async, [&, n] { return benchmark_row(f, n, config, options); }));
  std::vector<BenchmarkRow> rows;
  for (auto& job : jobs) {
    try {
      rows.push_back(job.get());
    } catch (...) {
      for (auto& rest : jobs)
        if (rest.valid()) rest.wait();
      if (done) *done = rows;
      throw;
    }
  }
  if (done) *done = rows;
  return rows;
}

double observed_order(double e_prev, double e_cur, int n_prev, int n_cur) {
  if (!(e_prev > 0.0) || !(e_cur > 0.0) || n_cur == n_prev) return std::nan("");
  return std::log(e_prev / e_cur) / std::log(static_cast<double>(n_cur) / n_prev);
}

namespace {

std::string cell(double v) { return std::isfinite(v) ? io::format_double(v) : ""; }

}  // namespace

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
  std::string out = std::string(kBenchmarkHeader) + "\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    out += std::to_string(r.n) + "," + cell(r.h) + "," + cell(r.first_hausdorff) + "," + cell(r.enhanced_hausdorff) +
           "," + cell(r.enhanced_hausdorff_clipped) + "," + cell(r.farfield_error) + "," + cell(r.graph_hausdorff);
    for (auto m : {&BenchmarkRow::first_hausdorff, &BenchmarkRow::enhanced_hausdorff,
                   &BenchmarkRow::enhanced_hausdorff_clipped, &BenchmarkRow::farfield_error,
                   &BenchmarkRow::graph_hausdorff}) {
      out += ',';
      if (k > 0) out += cell(observed_order(rows[k - 1].*m, r.*m, rows[k - 1].n, r.n));
    }
    out += '\n';
  }
  return out;
}

}  // namespace cellrecon
