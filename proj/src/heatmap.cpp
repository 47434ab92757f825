#include "lvmark/heatmap.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lvmark {

namespace {

constexpr int kMinSide = 32;

void check_spec(const GaussianSpec& spec, int height, int width) {
  if (height < kMinSide || width < kMinSide) {
    throw std::invalid_argument("render_label_heatmap: canvas must be at least 32 px per side");
  }
  if (!(spec.sigma_long > 0.0)) {
    throw std::invalid_argument("render_label_heatmap: sigma_long must be > 0");
  }
  if (!(spec.variance_ratio >= 1.0)) {
    throw std::invalid_argument("render_label_heatmap: variance_ratio must be >= 1");
  }
  const double n = std::hypot(spec.long_axis_direction[0], spec.long_axis_direction[1]);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("render_label_heatmap: long_axis_direction must be a unit vector");
  }
  if (!spec.center.finite() || spec.center.x < 0.0 || spec.center.x >= width ||
      spec.center.y < 0.0 || spec.center.y >= height) {
    std::ostringstream msg;
    msg << "render_label_heatmap: center (" << spec.center.x << ", " << spec.center.y
        << ") outside " << width << "x" << height << " canvas";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

torch::Tensor coordinate_grid(int size, torch::Dtype dtype, torch::Device device) {
  auto idx = torch::arange(size, torch::TensorOptions().dtype(dtype).device(device));
  return (idx * 2.0 + 1.0) / static_cast<double>(size) - 1.0;
}

torch::Tensor render_label_heatmap(const GaussianSpec& spec, int height, int width,
                                   torch::Dtype dtype) {
  check_spec(spec, height, width);

  const double norm = std::hypot(spec.long_axis_direction[0], spec.long_axis_direction[1]);
  const double ux = spec.long_axis_direction[0] / norm;
  const double uy = spec.long_axis_direction[1] / norm;
  const double sigma_long = spec.sigma_long;
  const double sigma_short = spec.sigma_long / std::sqrt(spec.variance_ratio);

  // rasterized in double, normalized, then cast so the unit-sum contract
  // survives the narrowing
  auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  auto dx = torch::arange(width, opts) - spec.center.x;        // (W)
  auto dy = (torch::arange(height, opts) - spec.center.y).view({height, 1});  // (H,1)

  auto lon = dx * ux + dy * uy;
  auto sho = dx * (-uy) + dy * ux;
  auto mahal = (lon / sigma_long).square() + (sho / sigma_short).square();
  auto g = torch::exp(-0.5 * mahal);
  g /= g.sum();
  return g.to(dtype);
}

HeatmapStack encode_labels(const LandmarkSet& lm, const MeasurementSet& ms, int height,
                           int width, const HeatmapConfig& cfg, torch::Dtype dtype) {
  // the measurement set must be the one derived from these landmarks
  for (int m = 0; m < kNumMeasurements; ++m) {
    const auto& v = ms[m];
    const auto& start = lm.points[2 * m];
    const auto& end = lm.points[2 * m + 1];
    if (std::abs(v.start.x - start.x) > 1e-9 || std::abs(v.start.y - start.y) > 1e-9 ||
        std::abs(v.end.x - end.x) > 1e-9 || std::abs(v.end.y - end.y) > 1e-9) {
      throw std::invalid_argument("encode_labels: measurement set inconsistent with landmarks");
    }
  }

  HeatmapStack stack;
  stack.kind = StackKind::Label;
  std::vector<torch::Tensor> channels;
  channels.reserve(kNumLandmarks);
  for (int m = 0; m < kNumMeasurements; ++m) {
    const auto& v = ms[m];
    GaussianSpec spec;
    spec.sigma_long = cfg.sigma_long;
    if (v.degenerate) {
      spec.variance_ratio = 1.0;
      spec.long_axis_direction = {1.0, 0.0};
      stack.isotropic_fallback[m] = true;
    } else {
      spec.variance_ratio = cfg.variance_ratio;
      spec.long_axis_direction = perpendicular(v.direction);
    }
    for (int e = 0; e < 2; ++e) {
      spec.center = lm.points[2 * m + e];
      channels.push_back(render_label_heatmap(spec, height, width, dtype));
    }
  }
  stack.maps = torch::stack(channels, 0);
  return stack;
}

torch::Tensor normalize_to_probability(const torch::Tensor& raw) {
  if (raw.dim() < 2) {
    throw std::invalid_argument("normalize_to_probability: expected at least 2 dims");
  }
  if (!torch::isfinite(raw).all().item<bool>()) {
    // identify the offending channel for the error message
    auto flat = raw.reshape({-1, raw.size(-2) * raw.size(-1)});
    auto bad = (~torch::isfinite(flat)).any(1).nonzero();
    std::ostringstream msg;
    msg << "normalize_to_probability: non-finite values in channel(s)";
    for (int64_t i = 0; i < std::min<int64_t>(bad.size(0), 8); ++i) {
      msg << " " << bad[i].item<int64_t>();
    }
    throw std::invalid_argument(msg.str());
  }
  const auto h = raw.size(-2);
  const auto w = raw.size(-1);
  auto shape = raw.sizes().vec();
  auto flat = raw.reshape({-1, h * w});
  auto probs = torch::softmax(flat, /*dim=*/1);
  return probs.reshape(shape);
}

HeatmapStack normalize_to_probability(const HeatmapStack& raw) {
  if (raw.kind != StackKind::PredictedRaw) {
    throw std::invalid_argument("normalize_to_probability: stack is not predicted-raw");
  }
  HeatmapStack out;
  out.kind = StackKind::PredictedNormalized;
  out.isotropic_fallback = raw.isotropic_fallback;
  out.maps = normalize_to_probability(raw.maps);
  return out;
}

torch::Tensor soft_center_of_mass(const torch::Tensor& probs) {
  if (probs.dim() < 2) {
    throw std::invalid_argument("soft_center_of_mass: expected at least 2 dims");
  }
  const auto h = static_cast<int>(probs.size(-2));
  const auto w = static_cast<int>(probs.size(-1));
  auto u = coordinate_grid(w, probs.scalar_type(), probs.device());  // (W)
  auto v = coordinate_grid(h, probs.scalar_type(), probs.device());  // (H)
  auto x = (probs * u).sum({-2, -1});
  auto y = (probs * v.view({h, 1})).sum({-2, -1});
  return torch::stack({x, y}, -1);
}

LandmarkSet decode_to_landmarks(const torch::Tensor& stack, StackKind kind) {
  if (kind == StackKind::PredictedRaw) {
    throw std::invalid_argument("decode_to_landmarks: normalize the stack first");
  }
  if (stack.dim() != 3 || stack.size(0) != kNumLandmarks) {
    throw std::invalid_argument("decode_to_landmarks: expected a (6,H,W) stack");
  }
  const int h = static_cast<int>(stack.size(1));
  const int w = static_cast<int>(stack.size(2));
  auto coords = soft_center_of_mass(stack).to(torch::kFloat64).contiguous();  // (6,2)
  auto acc = coords.accessor<double, 2>();
  LandmarkSet lm;
  for (int k = 0; k < kNumLandmarks; ++k) {
    lm.points[k] = {denormalize_coord(acc[k][0], w), denormalize_coord(acc[k][1], h)};
  }
  return lm;
}

LandmarkSet decode_to_landmarks(const HeatmapStack& stack) {
  return decode_to_landmarks(stack.maps, stack.kind);
}

std::vector<LandmarkSet> decode_batch(const torch::Tensor& stacks, StackKind kind) {
  if (stacks.dim() != 4) {
    throw std::invalid_argument("decode_batch: expected a (B,6,H,W) tensor");
  }
  std::vector<LandmarkSet> out;
  out.reserve(stacks.size(0));
  for (int64_t b = 0; b < stacks.size(0); ++b) {
    out.push_back(decode_to_landmarks(stacks[b], kind));
  }
  return out;
}

torch::Tensor landmarks_to_normalized(const LandmarkSet& lm, int size, torch::Dtype dtype) {
  auto out = torch::empty({kNumLandmarks, 2}, torch::kFloat64);
  auto acc = out.accessor<double, 2>();
  for (int k = 0; k < kNumLandmarks; ++k) {
    acc[k][0] = normalize_coord(lm.points[k].x, size);
    acc[k][1] = normalize_coord(lm.points[k].y, size);
  }
  return out.to(dtype);
}

}  // namespace lvmark
