#pragma once

#include <torch/torch.h>

#include <array>

#include "lvmark/geometry.hpp"
#include "lvmark/heatmap.hpp"

namespace lvmark {

struct LossWeights {
  double heatmap = 100.0;
  double coord = 1.0;
  double dist = 1.0;
  double angle = 1.0;
};

void validate(const LossWeights& w);  // all >= 0, at least one > 0

/// How the length error is normalized by the true length.
///   SquaredRelative:  ((|dhat| - |d|) / |d|)^2   (scale-invariant, default)
///   SquaredOverTrue:  (|dhat| - |d|)^2 / |d|
enum class DistanceLossForm { SquaredRelative, SquaredOverTrue };

struct LossBreakdown {
  double heatmap = 0.0;
  double coord = 0.0;
  double dist = 0.0;
  double angle = 0.0;
  double total = 0.0;
};

struct LossOptions {
  LossWeights weights;
  DistanceLossForm dist_form = DistanceLossForm::SquaredRelative;
  // minimum admissible true length, in the same units as the coordinates the
  // loss is evaluated in; shorter true measurements are excluded
  double eps_length = 1e-3;

  /// eps_length for losses evaluated in normalized coordinates, equivalent to
  /// eps_px pixels on a `size`-wide image.
  static double eps_for_normalized(double eps_px, int size) {
    return eps_px * 2.0 / static_cast<double>(size);
  }
};

// ---------------------------------------------------------------------------
// Differentiable tensor path. Coordinates are (..., 6, 2) tensors in
// normalized space; vector tensors are (..., 3, 2).
// ---------------------------------------------------------------------------

/// Endpoint pairs (0,1), (2,3), (4,5) -> per-measurement vectors.
torch::Tensor measurement_vectors(const torch::Tensor& coords);

/// RMSE over every entry of the two stacks. Shapes must match.
torch::Tensor heatmap_loss_t(const torch::Tensor& label, const torch::Tensor& predicted);

/// Mean over points (and batch) of the squared Euclidean coordinate error.
torch::Tensor coord_loss_t(const torch::Tensor& coords_true, const torch::Tensor& coords_pred);

/// Mean over admissible measurements of the length-error term. True lengths
/// <= eps_length are excluded from the mean.
torch::Tensor distance_loss_t(const torch::Tensor& vec_true, const torch::Tensor& vec_pred,
                              DistanceLossForm form, double eps_length);

/// Mean over admissible measurements of (1 - cos(v, vhat)); in [0, 2].
/// Degenerate predicted vectors contribute a constant 1 (no gradient);
/// degenerate true vectors are excluded.
torch::Tensor angle_loss_t(const torch::Tensor& vec_true, const torch::Tensor& vec_pred,
                           double eps_length);

struct TotalLoss {
  torch::Tensor total;  // scalar, carries the autograd graph
  torch::Tensor heatmap, coord, dist, angle;

  [[nodiscard]] LossBreakdown breakdown(const LossWeights& w) const;
};

/// Weighted sum of the four terms. `label_stack`/`pred_probs` are (...,6,H,W)
/// probability stacks; coords are (...,6,2) normalized. Distance and angle
/// vectors are derived from the coordinates, so the whole result is
/// differentiable with respect to the predicted stack.
TotalLoss total_loss_t(const torch::Tensor& label_stack, const torch::Tensor& pred_probs,
                       const torch::Tensor& coords_true, const torch::Tensor& coords_pred,
                       const LossOptions& opts);

// ---------------------------------------------------------------------------
// Scalar path over domain types: exact double arithmetic for evaluation,
// reporting and hand checks.
// ---------------------------------------------------------------------------

double heatmap_loss(const HeatmapStack& label, const HeatmapStack& predicted);

/// Computed in normalized coordinates of a size x size image.
double coord_loss(const LandmarkSet& c, const LandmarkSet& c_hat, int size);

struct DistanceLossResult {
  double value = 0.0;
  std::array<bool, kNumMeasurements> excluded{};  // true length <= eps
};
DistanceLossResult distance_loss(const MeasurementSet& d, const MeasurementSet& d_hat,
                                 DistanceLossForm form = DistanceLossForm::SquaredRelative,
                                 double eps_length = 1e-3);

struct AngleLossResult {
  double value = 0.0;
  std::array<bool, kNumMeasurements> degenerate_pred{};  // term forced to 1
  std::array<bool, kNumMeasurements> excluded{};         // degenerate true vector
};
AngleLossResult angle_loss(const MeasurementSet& d, const MeasurementSet& d_hat);

LossBreakdown total_loss(const HeatmapStack& label, const HeatmapStack& predicted,
                         const LandmarkSet& c, const LandmarkSet& c_hat,
                         const MeasurementSet& d, const MeasurementSet& d_hat, int size,
                         const LossOptions& opts);

}  // namespace lvmark
