// cellrecon: generate cell-average grids, run the reconstruction pipeline,
// and tabulate convergence orders.
//
// Exit codes: 0 success, 1 I/O or internal error, 2 detection failure,
// 3 edge-fit failure, 4 curve failure, 5 reconstruction failure, 64 bad usage.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cellrecon/benchmark.hpp"
#include "cellrecon/io.hpp"
#include "cellrecon/log.hpp"
#include "cellrecon/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cellrecon;
using io::json;

namespace {

struct RunConfig {
  std::string function = "closed-circle";
  std::string n_list = "40";
  std::string threshold_mode = "theoretical";
  double rho = 0.1;
  double hc_prime = 0.04;
  int stride = 1;
  double mesh_mult = 1.0;
  std::string curve_stage = "enhanced";
  std::string recon = "quasi";
  double ls_knot_factor = 2.0;
  std::string out = "out";
  std::string input;
  int eval_m = 64;
  unsigned seed = 1;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> ns;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw UsageError("bad --n entry '" + item + "'");
    }
    if (used != item.size()) throw UsageError("bad --n entry '" + item + "'");
    if (n < 8) throw UsageError("n must be >= 8 (got " + item + ")");
    ns.push_back(n);
  }
  if (ns.empty()) throw UsageError("--n is empty");
  return ns;
}

TestFunction catalog_function(const std::string& name) {
  const auto kind = parse_function_kind(name);
  if (!kind || *kind == FunctionKind::Custom)
    throw UsageError("unknown --function '" + name + "' (open-quarter-circle, closed-circle, step, smooth)");
  return make_catalog(*kind);
}

PipelineConfig pipeline_config(const RunConfig& c) {
  PipelineConfig p;
  p.threshold_mode = c.threshold_mode == "relative" ? ThresholdMode::Relative : ThresholdMode::Theoretical;
  p.rho = c.rho;
  p.hc_prime = c.hc_prime;
  p.stride = c.stride;
  p.mesh_multiplier = c.mesh_mult;
  p.curve_stage = c.curve_stage == "first" ? CurveStage::First : CurveStage::Enhanced;
  p.recon = c.recon == "ls" ? ReconMethod::LeastSquares : ReconMethod::Quasi;
  p.ls_knot_factor = c.ls_knot_factor;
  return p;
}

json config_json(const std::string& command, const RunConfig& c) {
  json cfg = {{"function", c.function},           {"n", c.n_list},
              {"threshold_mode", c.threshold_mode}, {"rho", c.rho},
              {"hc_prime", c.hc_prime},           {"stride", c.stride},
              {"mesh_mult", c.mesh_mult},         {"curve_stage", c.curve_stage},
              {"recon", c.recon},                 {"ls_knot_factor", c.ls_knot_factor},
              {"eval_m", c.eval_m},               {"seed", c.seed}};
  if (!c.input.empty()) cfg["input"] = c.input;
  json modules = json::object();
  for (const char* m : {"grid", "signature", "spline", "edge", "curve", "reconstruct", "cli"}) modules[m] = CELLRECON_VERSION;
  return {{"tool", "cellrecon"}, {"version", CELLRECON_VERSION}, {"command", command}, {"config", cfg}, {"modules", modules}};
}

class Bundle {
 public:
  Bundle(fs::path dir, json manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir_.string() + ": " + ec.message());
    manifest_["files"] = json::array();
  }

  void write(const std::string& name, const std::string& content) {
    io::write_file(dir_ / name, content);
    manifest_["files"].push_back(name);
  }
  json& manifest() { return manifest_; }
  void finish() { io::write_file(dir_ / "manifest.json", manifest_.dump(2) + "\n"); }

 private:
  fs::path dir_;
  json manifest_;
};

fs::path per_n_dir(const RunConfig& c, std::size_t count, int n) {
  return count > 1 ? fs::path(c.out) / ("n" + std::to_string(n)) : fs::path(c.out);
}

int cmd_gen(const RunConfig& c) {
  const auto f = catalog_function(c.function);
  const auto ns = parse_n_list(c.n_list);
  Bundle bundle(c.out, config_json("gen", c));
  for (int n : ns) {
    DiscretizeStats stats;
    const CellGrid g = discretize(f, n, 6, &stats);
    const std::string name = "grid_n" + std::to_string(n) + ".csv";
    bundle.write(name, io::grid_to_csv(g));
    bundle.manifest()["grids"].push_back(
        {{"file", name}, {"n", n}, {"crossed_cells", stats.crossed_cells}, {"unconverged", stats.unconverged}});
    log::info("wrote " + name);
  }
  bundle.finish();
  return 0;
}

std::string signature_csv(const SignatureField& s) {
  std::string out = "i,j,s\n";
  for (int j = 2; j <= s.n() - 1; ++j)
    for (int i = 2; i <= s.n() - 1; ++i)
      out += std::to_string(i) + "," + std::to_string(j) + "," + io::format_double(s(i, j)) + "\n";
  return out;
}

std::string evaluation_csv(const PiecewiseReconstruction& r, int m) {
  std::string out = "x,y,value\n";
  for (int b = 0; b < m; ++b)
    for (int a = 0; a < m; ++a) {
      const double x = (a + 0.5) / m, y = (b + 0.5) / m;
      out += io::format_double(x) + "," + io::format_double(y) + "," + io::format_double(evaluate(r, x, y)) + "\n";
    }
  return out;
}

json curve_json(const ImplicitCurve& c) {
  return {{"stage", to_string(c.stage)},
          {"mesh_n", c.mesh_n},
          {"knot_spacing", c.knot_spacing},
          {"h", c.h},
          {"spline", io::spline_to_json(c.spline)}};
}

void write_pipeline_bundle(Bundle& b, const PipelineResult& r, int eval_m) {
  const auto& rec = r.reconstruction;
  b.write("input_grid.csv", io::grid_to_csv(r.grid));
  if (r.signature) b.write("signature.csv", signature_csv(*r.signature));
  if (r.partition) b.write("partition.json", io::partition_to_json(*r.partition).dump(2) + "\n");
  if (r.chain) b.write("arcs.json", io::arcs_to_json(*r.chain).dump(2) + "\n");
  if (r.first_curve) {
    b.write("first_curve.json", curve_json(*r.first_curve).dump() + "\n");
    b.write("first_curve.csv", io::polylines_to_csv(r.first_curve->polylines));
  }
  if (r.enhanced_curve) {
    b.write("enhanced_curve.json", curve_json(*r.enhanced_curve).dump() + "\n");
    b.write("enhanced_curve.csv", io::polylines_to_csv(r.enhanced_curve->polylines));
  }
  if (rec.curve) b.write("curve_spline.json", curve_json(*rec.curve).dump() + "\n");

  json provenance = json::object();
  if (rec.side1.n() > 0) {
    b.write("side1_extended.csv", io::extended_grid_to_csv(rec.side1));
    provenance["side1"] = io::provenance_to_json(rec.side1);
  }
  if (rec.side2.n() > 0) {
    b.write("side2_extended.csv", io::extended_grid_to_csv(rec.side2));
    provenance["side2"] = io::provenance_to_json(rec.side2);
  }
  b.write("side1_spline.json", io::spline_to_json(rec.spline1).dump() + "\n");
  if (!rec.spline2.empty()) b.write("side2_spline.json", io::spline_to_json(rec.spline2).dump() + "\n");
  b.write("evaluation.csv", evaluation_csv(rec, eval_m));

  auto& m = b.manifest();
  m["result"] = {{"n", r.grid.n()},
                 {"single_side", r.single_side},
                 {"method", rec.method == ReconMethod::Quasi ? "quasi" : "ls"},
                 {"curve_stage", rec.curve ? to_string(rec.curve->stage) : "none"},
                 {"arcs", r.chain ? r.chain->arcs.size() : 0},
                 {"skipped_anchors", r.chain ? r.chain->skipped.size() : 0},
                 {"ls_residual", rec.residual}};
  if (rec.validity) m["result"]["valid_cells"] = {rec.validity->count(1), rec.validity->count(2)};
  m["provenance"] = provenance;
}

int cmd_pipeline(const RunConfig& c) {
  const PipelineConfig config = pipeline_config(c);
  if (c.eval_m < 1) throw UsageError("--eval-m must be positive");
  std::vector<std::pair<CellGrid, fs::path>> jobs;
  if (!c.input.empty()) {
    jobs.emplace_back(io::grid_from_csv(io::read_file(c.input)), fs::path(c.out));
  } else {
    const auto f = catalog_function(c.function);
    const auto ns = parse_n_list(c.n_list);
    for (int n : ns) jobs.emplace_back(discretize(f, n), per_n_dir(c, ns.size(), n));
  }
  for (const auto& [grid, dir] : jobs) {
    Bundle bundle(dir, config_json("pipeline", c));
    try {
      const PipelineResult r = run_pipeline(grid, config);
      write_pipeline_bundle(bundle, r, c.eval_m);
    } catch (const StageError& e) {
      bundle.manifest()["failure"] = {{"stage", e.stage()}, {"code", to_string(e.code())}, {"message", e.what()}};
      bundle.finish();
      throw;
    }
    bundle.finish();
    log::info("wrote bundle " + dir.string());
  }
  return 0;
}

int cmd_benchmark(const RunConfig& c) {
  const auto f = catalog_function(c.function);
  const auto ns = parse_n_list(c.n_list);
  BenchmarkOptions options;
  options.seed = c.seed;
  Bundle bundle(c.out, config_json("benchmark", c));
  bundle.manifest()["header"] = kBenchmarkHeader;
  bundle.manifest()["options"] = {{"farfield_m", options.farfield_m},
                                  {"farfield_dist_h", options.farfield_dist},
                                  {"graph_m_per_cell", options.graph_m_per_cell},
                                  {"near_samples", options.near_samples},
                                  {"clip_margin_h", options.clip_margin}};
  std::vector<BenchmarkRow> rows;
  try {
    run_benchmark(f, ns, pipeline_config(c), options, &rows);
  } catch (const StageError& e) {
    bundle.write("benchmark.csv", benchmark_csv(rows));
    bundle.manifest()["failure"] = {{"stage", e.stage()}, {"n", ns[rows.size()]}, {"message", e.what()}};
    bundle.finish();
    std::cout << benchmark_csv(rows);
    throw;
  }
  const std::string csv = benchmark_csv(rows);
  bundle.write("benchmark.csv", csv);
  bundle.finish();
  std::cout << csv;
  return 0;
}

void add_common(CLI::App* app, RunConfig& c, bool pipeline_flags) {
  app->add_option("--function", c.function, "catalog function: open-quarter-circle, closed-circle, step, smooth")
      ->capture_default_str();
  app->add_option("--n", c.n_list, "grid size, or comma-separated list")->capture_default_str();
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "seed for randomized sampling")->capture_default_str();
  if (!pipeline_flags) return;
  app->add_option("--threshold-mode", c.threshold_mode)
      ->check(CLI::IsMember({"theoretical", "relative"}))
      ->capture_default_str();
  app->add_option("--rho", c.rho, "relative threshold factor")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--hc-prime", c.hc_prime, "jump estimator parameter")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--stride", c.stride, "anchor stride along the irregular band")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--mesh-mult", c.mesh_mult, "enhanced-curve mesh multiplier")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--curve-stage", c.curve_stage)->check(CLI::IsMember({"first", "enhanced"}))->capture_default_str();
  app->add_option("--recon", c.recon)->check(CLI::IsMember({"quasi", "ls"}))->capture_default_str();
  app->add_option("--ls-knot-factor", c.ls_knot_factor, "least-squares knot spacing in units of h")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise-smooth reconstruction from cell averages"};
  app.set_version_flag("--version", CELLRECON_VERSION);
  app.require_subcommand(1);
  RunConfig c;
  auto* gen = app.add_subcommand("gen", "discretize a catalog function into a cell-average CSV");
  add_common(gen, c, false);
  auto* pipe = app.add_subcommand("pipeline", "reconstruct from a grid and write a bundle");
  add_common(pipe, c, true);
  pipe->add_option("--input", c.input, "grid CSV (instead of --function/--n)")->check(CLI::ExistingFile);
  pipe->add_option("--eval-m", c.eval_m, "evaluation dump resolution (m x m points)")->capture_default_str();
  auto* bench = app.add_subcommand("benchmark", "convergence table over a list of n");
  add_common(bench, c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(c);
    if (*pipe) return cmd_pipeline(c);
    return cmd_benchmark(c);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? kExitUsage : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
