#include "lvmark/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lvmark/heatmap.hpp"

namespace lvmark {

void validate(const ModelConfig& cfg) {
  if (cfg.depth < 1) throw std::invalid_argument("model: depth must be >= 1");
  if (cfg.base_filters < 1 || (cfg.base_filters & (cfg.base_filters - 1)) != 0) {
    throw std::invalid_argument("model: base_filters must be a power of two");
  }
  if (cfg.input_size < 1 || cfg.input_size % (1 << cfg.depth) != 0) {
    throw std::invalid_argument("model: input_size must be divisible by 2^depth");
  }
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
    throw std::invalid_argument("model: dropout_rate must be in [0,1)");
  }
  if (cfg.out_channels < 1) throw std::invalid_argument("model: out_channels must be >= 1");
  if (cfg.down_mode != "maxpool" && cfg.down_mode != "avgpool") {
    throw std::invalid_argument("model: down_mode must be maxpool or avgpool");
  }
  if (cfg.up_mode != "tconv" && cfg.up_mode != "nearest") {
    throw std::invalid_argument("model: up_mode must be tconv or nearest");
  }
}

torch::Tensor append_coord_channels(const torch::Tensor& image) {
  const bool batched = image.dim() == 4;
  if (!batched && image.dim() != 3) {
    throw std::invalid_argument("append_coord_channels: expected (1,H,W) or (B,1,H,W)");
  }
  if (image.size(batched ? 1 : 0) != 1) {
    throw std::invalid_argument("append_coord_channels: input must be single-channel");
  }
  const auto h = image.size(-2);
  const auto w = image.size(-1);
  auto u = coordinate_grid(static_cast<int>(w), image.scalar_type(), image.device());
  auto v = coordinate_grid(static_cast<int>(h), image.scalar_type(), image.device());
  auto xc = u.view({1, w}).expand({h, w});
  auto yc = v.view({h, 1}).expand({h, w});
  if (batched) {
    const auto b = image.size(0);
    auto grids = torch::stack({xc, yc}, 0).unsqueeze(0).expand({b, 2, h, w});
    return torch::cat({image, grids}, 1);
  }
  return torch::cat({image, torch::stack({xc, yc}, 0)}, 0);
}

ConvBlockImpl::ConvBlockImpl(int in_channels, int out_channels, double dropout_rate) {
  conv1_ = register_module(
      "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, 3).padding(1)));
  bn1_ = register_module("bn1", torch::nn::BatchNorm2d(out_channels));
  drop_ = register_module("drop", torch::nn::Dropout2d(dropout_rate));
  conv2_ = register_module(
      "conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(out_channels, out_channels, 3).padding(1)));
  bn2_ = register_module("bn2", torch::nn::BatchNorm2d(out_channels));
}

torch::Tensor ConvBlockImpl::forward(torch::Tensor x) {
  x = torch::relu(bn1_->forward(conv1_->forward(x)));
  x = drop_->forward(x);
  x = torch::relu(bn2_->forward(conv2_->forward(x)));
  return x;
}

CaliperUNetImpl::CaliperUNetImpl(const ModelConfig& cfg) : cfg_(cfg) {
  validate(cfg);
  const int levels = cfg.depth;
  int in_ch = cfg.in_channels();
  for (int l = 0; l < levels; ++l) {
    const int f = cfg.base_filters << l;
    enc_blocks_.push_back(ConvBlock(in_ch, f, cfg.dropout_rate));
    register_module("enc" + std::to_string(l), enc_blocks_.back());
    if (l + 1 < levels) {
      if (cfg.down_mode == "maxpool") {
        auto pool = torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2));
        register_module("down" + std::to_string(l), pool);
        down_ops_.emplace_back(pool);
      } else {
        auto pool = torch::nn::AvgPool2d(torch::nn::AvgPool2dOptions(2));
        register_module("down" + std::to_string(l), pool);
        down_ops_.emplace_back(pool);
      }
    }
    in_ch = f;
  }
  for (int l = levels - 2; l >= 0; --l) {
    const int f = cfg.base_filters << l;
    if (cfg.up_mode == "tconv") {
      auto up = torch::nn::ConvTranspose2d(
          torch::nn::ConvTranspose2dOptions(2 * f, f, 2).stride(2));
      register_module("up" + std::to_string(l), up);
      up_ops_.emplace_back(up);
    } else {
      auto up = torch::nn::Sequential(
          torch::nn::Upsample(torch::nn::UpsampleOptions()
                                  .scale_factor(std::vector<double>{2.0, 2.0})
                                  .mode(torch::kNearest)),
          torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * f, f, 1)));
      register_module("up" + std::to_string(l), up);
      up_ops_.emplace_back(up);
    }
    dec_blocks_.push_back(ConvBlock(2 * f, f, cfg.dropout_rate));
    register_module("dec" + std::to_string(l), dec_blocks_.back());
  }
  head_ = register_module(
      "head", torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg.base_filters, cfg.out_channels, 1)));
}

std::vector<int64_t> CaliperUNetImpl::encoder_filters() const {
  std::vector<int64_t> f;
  for (int l = 0; l < cfg_.depth; ++l) f.push_back(int64_t(cfg_.base_filters) << l);
  return f;
}

torch::Tensor CaliperUNetImpl::run(torch::Tensor x,
                                   std::vector<std::pair<std::string, torch::Tensor>>* trace) {
  auto record = [&](const std::string& name, const torch::Tensor& t) {
    if (trace) trace->emplace_back(name, t);
  };
  if (cfg_.use_coordconv) {
    x = append_coord_channels(x);
    record("coordconv", x);
  }
  std::vector<torch::Tensor> skips;
  for (size_t l = 0; l < enc_blocks_.size(); ++l) {
    x = enc_blocks_[l]->forward(x);
    record("enc" + std::to_string(l), x);
    if (l + 1 < enc_blocks_.size()) {
      skips.push_back(x);
      x = down_ops_[l].forward(x);
      record("down" + std::to_string(l), x);
    }
  }
  for (size_t i = 0; i < dec_blocks_.size(); ++i) {
    const size_t level = enc_blocks_.size() - 2 - i;
    x = up_ops_[i].forward(x);
    record("up" + std::to_string(level), x);
    x = torch::cat({skips[level], x}, 1);
    x = dec_blocks_[i]->forward(x);
    record("dec" + std::to_string(level), x);
  }
  x = head_->forward(x);
  record("head", x);
  return x;
}

torch::Tensor CaliperUNetImpl::forward(torch::Tensor x) {
  if (x.dim() != 4 || x.size(1) != 1) {
    throw std::invalid_argument("forward: expected a (B,1,H,W) batch");
  }
  const int64_t stride = int64_t{1} << (cfg_.depth - 1);
  if (x.size(2) % stride != 0 || x.size(3) % stride != 0) {
    throw std::invalid_argument("forward: spatial size must be divisible by 2^(depth-1)");
  }
  auto out = run(x, nullptr);
  if (!torch::isfinite(out).all().item<bool>()) {
    // replay with a trace to name the first bad layer
    torch::NoGradGuard no_grad;
    std::vector<std::pair<std::string, torch::Tensor>> trace;
    run(x.detach(), &trace);
    std::string first = "unknown";
    for (const auto& [name, t] : trace) {
      if (!torch::isfinite(t).all().item<bool>()) {
        first = name;
        break;
      }
    }
    throw std::runtime_error("forward: non-finite activations, first seen at layer '" + first + "'");
  }
  return out;
}

CaliperUNet build_model(const ModelConfig& cfg, uint64_t init_seed) {
  validate(cfg);
  torch::manual_seed(init_seed);
  CaliperUNet model(cfg);
  for (auto& m : model->modules(/*include_self=*/false)) {
    if (auto* conv = m->as<torch::nn::Conv2d>()) {
      torch::nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanIn, torch::kReLU);
      if (conv->bias.defined()) torch::nn::init::zeros_(conv->bias);
    } else if (auto* tconv = m->as<torch::nn::ConvTranspose2d>()) {
      torch::nn::init::kaiming_normal_(tconv->weight, 0.0, torch::kFanIn, torch::kReLU);
      if (tconv->bias.defined()) torch::nn::init::zeros_(tconv->bias);
    } else if (auto* bn = m->as<torch::nn::BatchNorm2d>()) {
      torch::nn::init::ones_(bn->weight);
      torch::nn::init::zeros_(bn->bias);
    }
  }
  return model;
}

ModelSummary summarize(const CaliperUNet& model) {
  ModelSummary s;
  for (const auto& p : model->named_parameters()) {
    if (!p.value().requires_grad()) continue;
    LayerInfo info;
    info.name = p.key();
    info.shape = p.value().sizes().vec();
    info.params = p.value().numel();
    s.parameter_count += info.params;
    s.layers.push_back(std::move(info));
  }
  s.encoder_filters = model->encoder_filters();
  return s;
}

std::string format_summary(const ModelSummary& summary) {
  std::ostringstream os;
  os << "layer";
  os << std::string(34, ' ') << "shape                 params\n";
  for (const auto& l : summary.layers) {
    std::ostringstream shape;
    shape << "[";
    for (size_t i = 0; i < l.shape.size(); ++i) shape << (i ? "," : "") << l.shape[i];
    shape << "]";
    os << l.name << std::string(l.name.size() < 39 ? 39 - l.name.size() : 1, ' ')
       << shape.str() << std::string(shape.str().size() < 22 ? 22 - shape.str().size() : 1, ' ')
       << l.params << "\n";
  }
  os << "total trainable parameters: " << summary.parameter_count << "\n";
  return os.str();
}

}  // namespace lvmark
