#include "lvmark/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace lvmark {

void validate(const LossWeights& w) {
  const double vals[] = {w.heatmap, w.coord, w.dist, w.angle};
  double sum = 0.0;
  for (double v : vals) {
    if (!(v >= 0.0)) throw std::invalid_argument("loss weights must be non-negative");
    sum += v;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("at least one loss weight must be > 0");
}

torch::Tensor measurement_vectors(const torch::Tensor& coords) {
  if (coords.size(-1) != 2 || coords.size(-2) != kNumLandmarks) {
    throw std::invalid_argument("measurement_vectors: expected (...,6,2) coordinates");
  }
  using torch::indexing::Ellipsis;
  using torch::indexing::Slice;
  auto ends = coords.index({Ellipsis, Slice(1, 6, 2), Slice()});
  auto starts = coords.index({Ellipsis, Slice(0, 6, 2), Slice()});
  return ends - starts;
}

torch::Tensor heatmap_loss_t(const torch::Tensor& label, const torch::Tensor& predicted) {
  if (label.sizes() != predicted.sizes()) {
    throw std::invalid_argument("heatmap_loss: shape mismatch");
  }
  return (predicted - label).square().mean().sqrt();
}

torch::Tensor coord_loss_t(const torch::Tensor& coords_true, const torch::Tensor& coords_pred) {
  if (coords_true.sizes() != coords_pred.sizes()) {
    throw std::invalid_argument("coord_loss: shape mismatch");
  }
  return (coords_pred - coords_true).square().sum(-1).mean();
}

namespace {

torch::Tensor safe_len(const torch::Tensor& vec) {
  // sqrt has an unbounded gradient at 0; the clamp keeps backward finite for
  // exactly-degenerate predictions (their loss terms are masked anyway)
  return vec.square().sum(-1).clamp_min(1e-24).sqrt();
}

torch::Tensor masked_mean(const torch::Tensor& terms, const torch::Tensor& mask) {
  auto n = mask.sum();
  if (n.item<double>() == 0.0) {
    return torch::zeros({}, terms.options());
  }
  return (terms * mask).sum() / n;
}

}  // namespace

torch::Tensor distance_loss_t(const torch::Tensor& vec_true, const torch::Tensor& vec_pred,
                              DistanceLossForm form, double eps_length) {
  auto len_true = safe_len(vec_true);
  auto len_pred = safe_len(vec_pred);
  auto valid = (len_true > eps_length).to(len_true.dtype());
  auto denom = len_true.clamp_min(eps_length);
  auto diff = len_pred - len_true;
  torch::Tensor terms;
  if (form == DistanceLossForm::SquaredRelative) {
    terms = (diff / denom).square();
  } else {
    terms = diff.square() / denom;
  }
  return masked_mean(terms, valid);
}

torch::Tensor angle_loss_t(const torch::Tensor& vec_true, const torch::Tensor& vec_pred,
                           double eps_length) {
  auto len_true = safe_len(vec_true);
  auto len_pred = safe_len(vec_pred);
  auto valid = (len_true > eps_length).to(len_true.dtype());
  auto cosine = ((vec_true * vec_pred).sum(-1) / (len_true * len_pred)).clamp(-1.0, 1.0);
  auto term = 1.0 - cosine;
  // degenerate prediction: constant orthogonal-equivalent penalty, no gradient
  auto degenerate = len_pred <= eps_length;
  term = torch::where(degenerate, torch::ones_like(term).detach(), term);
  return masked_mean(term, valid);
}

LossBreakdown TotalLoss::breakdown(const LossWeights& w) const {
  LossBreakdown b;
  b.heatmap = heatmap.item<double>();
  b.coord = coord.item<double>();
  b.dist = dist.item<double>();
  b.angle = angle.item<double>();
  b.total = w.heatmap * b.heatmap + w.coord * b.coord + w.dist * b.dist + w.angle * b.angle;
  return b;
}

TotalLoss total_loss_t(const torch::Tensor& label_stack, const torch::Tensor& pred_probs,
                       const torch::Tensor& coords_true, const torch::Tensor& coords_pred,
                       const LossOptions& opts) {
  validate(opts.weights);
  TotalLoss out;
  out.heatmap = heatmap_loss_t(label_stack, pred_probs);
  out.coord = coord_loss_t(coords_true, coords_pred);
  auto vec_true = measurement_vectors(coords_true);
  auto vec_pred = measurement_vectors(coords_pred);
  out.dist = distance_loss_t(vec_true, vec_pred, opts.dist_form, opts.eps_length);
  out.angle = angle_loss_t(vec_true, vec_pred, opts.eps_length);
  out.total = opts.weights.heatmap * out.heatmap + opts.weights.coord * out.coord +
              opts.weights.dist * out.dist + opts.weights.angle * out.angle;
  return out;
}

// ---------------------------------------------------------------------------

double heatmap_loss(const HeatmapStack& label, const HeatmapStack& predicted) {
  if (label.kind == StackKind::PredictedRaw || predicted.kind == StackKind::PredictedRaw) {
    throw std::invalid_argument("heatmap_loss: stacks must be probability-normalized");
  }
  if (label.maps.sizes() != predicted.maps.sizes()) {
    throw std::invalid_argument("heatmap_loss: shape mismatch");
  }
  auto a = label.maps.to(torch::kFloat64);
  auto b = predicted.maps.to(torch::kFloat64);
  return (b - a).square().mean().sqrt().item<double>();
}

double coord_loss(const LandmarkSet& c, const LandmarkSet& c_hat, int size) {
  double acc = 0.0;
  for (int k = 0; k < kNumLandmarks; ++k) {
    const double dx = normalize_coord(c_hat.points[k].x, size) - normalize_coord(c.points[k].x, size);
    const double dy = normalize_coord(c_hat.points[k].y, size) - normalize_coord(c.points[k].y, size);
    acc += dx * dx + dy * dy;
  }
  return acc / kNumLandmarks;
}

DistanceLossResult distance_loss(const MeasurementSet& d, const MeasurementSet& d_hat,
                                 DistanceLossForm form, double eps_length) {
  DistanceLossResult r;
  double acc = 0.0;
  int n = 0;
  for (int m = 0; m < kNumMeasurements; ++m) {
    const double lt = d[m].length;
    if (lt <= eps_length) {
      r.excluded[m] = true;
      continue;
    }
    const double diff = d_hat[m].length - lt;
    acc += (form == DistanceLossForm::SquaredRelative) ? (diff / lt) * (diff / lt)
                                                       : diff * diff / lt;
    ++n;
  }
  r.value = n > 0 ? acc / n : 0.0;
  return r;
}

AngleLossResult angle_loss(const MeasurementSet& d, const MeasurementSet& d_hat) {
  AngleLossResult r;
  double acc = 0.0;
  int n = 0;
  for (int m = 0; m < kNumMeasurements; ++m) {
    if (d[m].degenerate) {
      r.excluded[m] = true;
      continue;
    }
    double term;
    if (d_hat[m].degenerate) {
      r.degenerate_pred[m] = true;
      term = 1.0;
    } else {
      term = 1.0 - *angle_cosine(d[m], d_hat[m]);
    }
    acc += term;
    ++n;
  }
  r.value = n > 0 ? acc / n : 0.0;
  return r;
}

LossBreakdown total_loss(const HeatmapStack& label, const HeatmapStack& predicted,
                         const LandmarkSet& c, const LandmarkSet& c_hat,
                         const MeasurementSet& d, const MeasurementSet& d_hat, int size,
                         const LossOptions& opts) {
  validate(opts.weights);
  LossBreakdown b;
  b.heatmap = heatmap_loss(label, predicted);
  b.coord = coord_loss(c, c_hat, size);
  b.dist = distance_loss(d, d_hat, opts.dist_form, opts.eps_length).value;
  b.angle = angle_loss(d, d_hat).value;
  const auto& w = opts.weights;
  b.total = w.heatmap * b.heatmap + w.coord * b.coord + w.dist * b.dist + w.angle * b.angle;
  return b;
}

}  // namespace lvmark
