#include "cellrecon/pipeline.hpp"

#include <algorithm>

#include "cellrecon/log.hpp"

namespace cellrecon {

namespace {

template <class F>
auto stage(const char* name, int exit_code, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, exit_code, e);
  }
}

PiecewiseReconstruction reconstruct(const CellGrid& g, const std::optional<ImplicitCurve>& curve,
                                    const PipelineConfig& config) {
  return stage("reconstruct", kExitReconstruct, [&] {
    if (config.recon == ReconMethod::LeastSquares) return fit_cell_average_ls(g, curve, config.ls_knot_factor * g.h());
    return build_reconstruction(g, curve);
  });
}

}  // namespace

PipelineResult run_pipeline(const CellGrid& g, const PipelineConfig& config) {
  if (config.stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  PipelineResult out;
  out.grid = g;
  out.signature = stage("signature", kExitDetect, [&] { return compute_signature(g); });

  double delta = 0.0;
  try {
    delta = estimate_delta(g, config.hc_prime);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoJumpDetected) throw StageError("detect", kExitDetect, e);
    const auto [lo, hi] = std::minmax_element(g.values().begin(), g.values().end());
    if (*lo == *hi) throw StageError("detect", kExitDetect, e);  // flat data: nothing to reconstruct from
    log::info("no jump detected; reconstructing a single smooth piece");
    out.single_side = true;
    out.reconstruction = reconstruct(g, std::nullopt, config);
    return out;
  }

  out.partition = stage("detect", kExitDetect, [&] {
    const double param = config.threshold_mode == ThresholdMode::Theoretical ? delta : config.rho;
    return detect(g, *out.signature, config.threshold_mode, param);
  });
  log::info("detect: |U0| = " + std::to_string(out.partition->u0.size()));

  try {
    out.first_curve = first_stage_curve(*out.partition);
  } catch (const Error& e) {
    if (config.curve_stage == CurveStage::First) throw StageError("curve", kExitCurve, e);
    log::warn(std::string("first-stage curve failed: ") + e.what());
  }

  std::optional<ImplicitCurve> curve = out.first_curve;
  if (config.curve_stage == CurveStage::Enhanced) {
    out.chain = stage("edge", kExitEdge, [&] { return chain_arcs(*out.partition, g, {config.stride, 16}); });
    log::info("edge: " + std::to_string(out.chain->arcs.size()) + " arcs, " +
              std::to_string(out.chain->skipped.size()) + " skipped");
    out.enhanced_curve = stage("curve", kExitCurve, [&] {
      EnhancedOptions opts;
      opts.mesh_multiplier = config.mesh_multiplier;
      return enhanced_curve(out.chain->arcs, *out.partition, g.h(), opts);
    });
    curve = out.enhanced_curve;
  }
  out.reconstruction = reconstruct(g, curve, config);
  return out;
}

}  // namespace cellrecon
