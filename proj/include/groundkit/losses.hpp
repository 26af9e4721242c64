#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "groundkit/errors.hpp"
#include "groundkit/mask.hpp"

namespace groundkit {

/// Weights of the combined training objective alpha*L_text + beta*L_dice +
/// gamma_weight*L_focal, plus the knobs of the individual loss terms. The
/// text term itself is out of scope here; the weight is carried so configs
/// round-trip.
struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma_weight = 1.0;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  double dice_smooth = 1e-6;
};

namespace detail {
inline void require_same_shape(const SoftMask& pred, const BinaryMask& target,
                               const char* op) {
  if (pred.height != target.height || pred.width != target.width)
    throw ShapeError(std::string(op) + ": pred/target dimensions differ");
  if (pred.probs.size() != pred.height * pred.width ||
      target.data.size() != target.height * target.width)
    throw ShapeError(std::string(op) + ": data length mismatch");
}
constexpr double kProbEps = 1e-7;
}  // namespace detail

/// Dice loss 1 - (2*sum(p*t) + smooth) / (sum(p) + sum(t) + smooth).
inline double dice_loss(const SoftMask& pred, const BinaryMask& target, double smooth) {
  detail::require_same_shape(pred, target, "dice_loss");
  double spt = 0.0, sp = 0.0, st = 0.0;
  for (std::size_t i = 0; i < pred.probs.size(); ++i) {
    spt += pred.probs[i] * target.data[i];
    sp += pred.probs[i];
    st += target.data[i];
  }
  return 1.0 - (2.0 * spt + smooth) / (sp + st + smooth);
}

/// Gradient of dice_loss w.r.t. each pred entry.
inline std::vector<double> dice_loss_grad(const SoftMask& pred, const BinaryMask& target,
                                          double smooth) {
  detail::require_same_shape(pred, target, "dice_loss_grad");
  double spt = 0.0, sp = 0.0, st = 0.0;
  for (std::size_t i = 0; i < pred.probs.size(); ++i) {
    spt += pred.probs[i] * target.data[i];
    sp += pred.probs[i];
    st += target.data[i];
  }
  const double denom = sp + st + smooth;
  const double numer = 2.0 * spt + smooth;
  std::vector<double> grad(pred.probs.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    double t = target.data[i];
    // d/dp_i of -(numer/denom): quotient rule with d(numer)=2t, d(denom)=1.
    grad[i] = -(2.0 * t * denom - numer) / (denom * denom);
  }
  return grad;
}

/// Focal loss: mean over pixels of -alpha_t * (1-p_t)^gamma * log(p_t) with
/// p_t = p when t=1 else 1-p, alpha_t = focal_alpha when t=1 else
/// 1-focal_alpha. Probabilities are clamped to [eps, 1-eps] before the log.
inline double focal_loss(const SoftMask& pred, const BinaryMask& target,
                         double focal_gamma, double focal_alpha) {
  detail::require_same_shape(pred, target, "focal_loss");
  const std::size_t n = pred.probs.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double p = std::clamp(pred.probs[i], detail::kProbEps, 1.0 - detail::kProbEps);
    bool fg = target.data[i] != 0;
    double pt = fg ? p : 1.0 - p;
    double at = fg ? focal_alpha : 1.0 - focal_alpha;
    sum += -at * std::pow(1.0 - pt, focal_gamma) * std::log(pt);
  }
  return sum / static_cast<double>(n);
}

/// Gradient of focal_loss w.r.t. each pred entry. Valid where the clamp is
/// inactive (pred strictly inside (eps, 1-eps)); at the clamp boundary the
/// loss is locally constant and the gradient is reported as 0.
inline std::vector<double> focal_loss_grad(const SoftMask& pred, const BinaryMask& target,
                                           double focal_gamma, double focal_alpha) {
  detail::require_same_shape(pred, target, "focal_loss_grad");
  const std::size_t n = pred.probs.size();
  std::vector<double> grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    double p = pred.probs[i];
    if (p <= detail::kProbEps || p >= 1.0 - detail::kProbEps) {
      grad[i] = 0.0;
      continue;
    }
    bool fg = target.data[i] != 0;
    double pt = fg ? p : 1.0 - p;
    double at = fg ? focal_alpha : 1.0 - focal_alpha;
    double u = 1.0 - pt;
    // d/dp_t of -at*u^g*log(pt); the u^(g-1) term vanishes for g == 0.
    double term1 = (focal_gamma == 0.0)
                       ? 0.0
                       : at * focal_gamma * std::pow(u, focal_gamma - 1.0) * std::log(pt);
    double dpt = term1 - at * std::pow(u, focal_gamma) / pt;
    grad[i] = (fg ? dpt : -dpt) / static_cast<double>(n);
  }
  return grad;
}

}  // namespace groundkit
