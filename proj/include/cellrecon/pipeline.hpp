#pragma once

#include <optional>
#include <string>

#include "cellrecon/curve.hpp"
#include "cellrecon/edge.hpp"
#include "cellrecon/error.hpp"
#include "cellrecon/grid.hpp"
#include "cellrecon/reconstruct.hpp"
#include "cellrecon/signature.hpp"

namespace cellrecon {

struct PipelineConfig {
  ThresholdMode threshold_mode = ThresholdMode::Theoretical;
  double rho = 0.1;         // relative mode: T = rho * max|s|
  double hc_prime = 0.04;   // delta* estimator threshold is sqrt(hc_prime)
  int stride = 1;
  double mesh_multiplier = 1.0;
  CurveStage curve_stage = CurveStage::Enhanced;
  ReconMethod recon = ReconMethod::Quasi;
  double ls_knot_factor = 2.0;  // least-squares knot spacing in units of h
};

struct PipelineResult {
  CellGrid grid;
  std::optional<SignatureField> signature;
  std::optional<CellPartition> partition;
  std::optional<ArcChain> chain;
  std::optional<ImplicitCurve> first_curve;
  std::optional<ImplicitCurve> enhanced_curve;
  PiecewiseReconstruction reconstruction;
  bool single_side = false;  // no jump found: one smooth piece
};

/// A pipeline failure tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, int exit_code, const Error& cause)
      : Error(cause.code(), stage + ": " + cause.what()), stage_(std::move(stage)), exit_code_(exit_code) {}

  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

inline constexpr int kExitDetect = 2;
inline constexpr int kExitEdge = 3;
inline constexpr int kExitCurve = 4;
inline constexpr int kExitReconstruct = 5;
inline constexpr int kExitUsage = 64;

/// signature -> detect -> arcs -> curve -> reconstruction.  Data without a
/// detectable jump (but not constant) falls back to a single smooth piece.
PipelineResult run_pipeline(const CellGrid& g, const PipelineConfig& config = {});

}  // namespace cellrecon
