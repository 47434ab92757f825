#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

namespace lvmark {

struct ModelConfig {
  int depth = 4;             // number of resolution levels on the encoder path
  int base_filters = 64;     // filters at the first level, doubled per level
  double dropout_rate = 0.1; // spatial (channel-wise) dropout between the two convs
  int input_size = 256;
  int out_channels = 6;
  bool use_coordconv = true;
  std::string down_mode = "maxpool";  // maxpool | avgpool
  std::string up_mode = "tconv";      // tconv | nearest

  [[nodiscard]] int in_channels() const { return use_coordconv ? 3 : 1; }
  [[nodiscard]] bool operator==(const ModelConfig&) const = default;
};

void validate(const ModelConfig& cfg);  // throws std::invalid_argument

/// Append the normalized pixel-center coordinate grids as two extra channels:
/// (1,H,W) -> (3,H,W) or (B,1,H,W) -> (B,3,H,W). Channel 1 is x (constant
/// along rows), channel 2 is y (constant along columns).
torch::Tensor append_coord_channels(const torch::Tensor& image);

/// conv3x3 -> BN -> ReLU -> spatial dropout -> conv3x3 -> BN -> ReLU,
/// all convs padded so spatial size is preserved.
class ConvBlockImpl : public torch::nn::Module {
 public:
  ConvBlockImpl(int in_channels, int out_channels, double dropout_rate);
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr};
  torch::nn::Dropout2d drop_{nullptr};
};
TORCH_MODULE(ConvBlock);

/// Encoder-decoder with skip concatenation. Level l runs at 1/2^l resolution
/// with base_filters * 2^l filters; the deepest level is the bottom of the U.
/// A 1x1 projection maps back to out_channels raw heatmaps at input
/// resolution. No output normalization happens here.
class CaliperUNetImpl : public torch::nn::Module {
 public:
  explicit CaliperUNetImpl(const ModelConfig& cfg);

  /// (B, 1, H, W) -> (B, 6, H, W) raw scores. Throws with layer diagnostics
  /// if the output is non-finite.
  torch::Tensor forward(torch::Tensor x);

  [[nodiscard]] const ModelConfig& config() const { return cfg_; }
  [[nodiscard]] std::vector<int64_t> encoder_filters() const;

 private:
  torch::Tensor run(torch::Tensor x, std::vector<std::pair<std::string, torch::Tensor>>* trace);

  ModelConfig cfg_;
  std::vector<ConvBlock> enc_blocks_;
  std::vector<ConvBlock> dec_blocks_;
  std::vector<torch::nn::AnyModule> down_ops_;
  std::vector<torch::nn::AnyModule> up_ops_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(CaliperUNet);

/// Construct and initialize a model. Weights use variance-scaling (fan-in)
/// initialization drawn from the torch RNG seeded with init_seed.
CaliperUNet build_model(const ModelConfig& cfg, uint64_t init_seed = 0);

struct LayerInfo {
  std::string name;
  std::vector<int64_t> shape;
  int64_t params = 0;
};

struct ModelSummary {
  int64_t parameter_count = 0;          // trainable parameters
  std::vector<LayerInfo> layers;        // per named parameter
  std::vector<int64_t> encoder_filters; // filters per encoder level
};

ModelSummary summarize(const CaliperUNet& model);

/// Table-style rendering of a summary (one row per parameter tensor).
std::string format_summary(const ModelSummary& summary);

}  // namespace lvmark
