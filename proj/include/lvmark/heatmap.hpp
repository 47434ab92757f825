#pragma once

#include <torch/torch.h>

#include <array>
#include <vector>

#include "lvmark/geometry.hpp"

namespace lvmark {

/// Where a stack sits in the dataflow. Label and predicted-normalized stacks
/// are probability maps (non-negative, each channel summing to 1); raw stacks
/// are unconstrained network scores.
enum class StackKind { Label, PredictedRaw, PredictedNormalized };

struct HeatmapConfig {
  double sigma_long = 14.0;      // std-dev along the long axis, pixels
  double variance_ratio = 20.0;  // long:short variance ratio
};

/// Oriented 2D Gaussian: covariance has major eigen-axis along
/// long_axis_direction with eigenvalue sigma_long^2 and minor eigenvalue
/// sigma_long^2 / variance_ratio.
struct GaussianSpec {
  PixelPoint center;
  double sigma_long = 14.0;
  double variance_ratio = 20.0;
  std::array<double, 2> long_axis_direction{1.0, 0.0};
};

/// Six per-landmark channels in canonical landmark order.
struct HeatmapStack {
  torch::Tensor maps;  // (6, H, W)
  StackKind kind = StackKind::Label;
  // per measurement: encode fell back to an isotropic Gaussian because the
  // measurement was degenerate
  std::array<bool, kNumMeasurements> isotropic_fallback{};

  [[nodiscard]] int64_t height() const { return maps.size(-2); }
  [[nodiscard]] int64_t width() const { return maps.size(-1); }
};

/// 1D pixel-center grid: element i is (2i+1)/size - 1.
torch::Tensor coordinate_grid(int size, torch::Dtype dtype = torch::kFloat32,
                              torch::Device device = torch::kCPU);

/// Rasterize one oriented Gaussian over an (height, width) canvas, evaluated
/// at every pixel center and divided by its sum so the channel is a
/// probability map. Throws if the center is outside the canvas or the spec
/// violates its invariants.
torch::Tensor render_label_heatmap(const GaussianSpec& spec, int height, int width,
                                   torch::Dtype dtype = torch::kFloat32);

/// Label stack for one sample: each landmark channel is rendered with the
/// long axis orthogonal to the owning measurement's direction. Degenerate
/// measurements fall back to isotropic Gaussians (flagged, never fatal).
HeatmapStack encode_labels(const LandmarkSet& lm, const MeasurementSet& ms, int height,
                           int width, const HeatmapConfig& cfg = {},
                           torch::Dtype dtype = torch::kFloat32);

/// Per-channel spatial softmax over the last two dims. Accepts any leading
/// shape, e.g. (6,H,W) or (B,6,H,W). Throws on non-finite input naming the
/// offending channel.
torch::Tensor normalize_to_probability(const torch::Tensor& raw);
HeatmapStack normalize_to_probability(const HeatmapStack& raw);

/// Expectation of the normalized pixel-center grid under each probability
/// map: (..., H, W) -> (..., 2) with (x, y) order. Differentiable.
torch::Tensor soft_center_of_mass(const torch::Tensor& probs);

/// soft_center_of_mass followed by normalized->pixel conversion.
LandmarkSet decode_to_landmarks(const HeatmapStack& stack);
LandmarkSet decode_to_landmarks(const torch::Tensor& stack, StackKind kind);
std::vector<LandmarkSet> decode_batch(const torch::Tensor& stacks, StackKind kind);

/// Landmark coordinates as a (6, 2) tensor in normalized (x, y) coordinates.
torch::Tensor landmarks_to_normalized(const LandmarkSet& lm, int size,
                                      torch::Dtype dtype = torch::kFloat32);

}  // namespace lvmark
