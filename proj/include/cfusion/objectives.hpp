#pragma once

// Training objectives as plain numeric functions, each paired with its
// analytic gradient with respect to the prediction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cfusion/error.hpp"

namespace cfusion {

inline constexpr double kProbabilityEpsilon = 1e-7;

struct LossConfig {
  double alpha_focal = 2.0;
  double beta_focal = 4.0;
};

inline double ClampProbability(double p) {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

namespace detail {
inline void CheckSameSize(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::kShapeMismatch, "prediction and target sizes differ");
}
inline void CheckMask(std::span<const std::uint8_t> mask, std::size_t n) {
  if (!mask.empty() && mask.size() != n) throw Error(ErrorCode::kShapeMismatch, "mask size differs");
}
inline bool Active(std::span<const std::uint8_t> mask, std::size_t i) { return mask.empty() || mask[i]; }

inline std::size_t CountPositives(std::span<const double> gt) {
  return static_cast<std::size_t>(std::count(gt.begin(), gt.end(), 1.0));
}
}  // namespace detail

/// Penalty-reduced focal loss over a heatmap, normalized by max(1, #positives).
inline double FocalLoss(std::span<const double> pred, std::span<const double> gt, const LossConfig& cfg = {}) {
  detail::CheckSameSize(pred.size(), gt.size());
  const double n = static_cast<double>(std::max<std::size_t>(1, detail::CountPositives(gt)));
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = ClampProbability(pred[i]);
    if (gt[i] == 1.0) {
      sum += std::pow(1.0 - p, cfg.alpha_focal) * std::log(p);
    } else {
      sum += std::pow(1.0 - gt[i], cfg.beta_focal) * std::pow(p, cfg.alpha_focal) * std::log(1.0 - p);
    }
  }
  return -sum / n;
}

/// d FocalLoss / d pred, for predictions strictly inside the clamp range.
inline std::vector<double> FocalLossGradient(std::span<const double> pred, std::span<const double> gt,
                                             const LossConfig& cfg = {}) {
  detail::CheckSameSize(pred.size(), gt.size());
  const double n = static_cast<double>(std::max<std::size_t>(1, detail::CountPositives(gt)));
  const double a = cfg.alpha_focal;
  std::vector<double> grad(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = ClampProbability(pred[i]);
    double g;
    if (gt[i] == 1.0) {
      // d/dp (1-p)^a log p
      g = -a * std::pow(1.0 - p, a - 1.0) * std::log(p) + std::pow(1.0 - p, a) / p;
    } else {
      // d/dp (1-y)^b p^a log(1-p)
      g = std::pow(1.0 - gt[i], cfg.beta_focal) *
          (a * std::pow(p, a - 1.0) * std::log(1.0 - p) - std::pow(p, a) / (1.0 - p));
    }
    grad[i] = -g / n;
  }
  return grad;
}

// Masks hold one byte per entry (nonzero = active); an empty mask selects all.

/// Mean absolute error over active entries.
inline double L1Loss(std::span<const double> pred, std::span<const double> target,
                     std::span<const std::uint8_t> mask = {}) {
  detail::CheckSameSize(pred.size(), target.size());
  detail::CheckMask(mask, pred.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!detail::Active(mask, i)) continue;
    sum += std::abs(pred[i] - target[i]);
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

inline std::vector<double> L1LossGradient(std::span<const double> pred, std::span<const double> target,
                                          std::span<const std::uint8_t> mask = {}) {
  detail::CheckSameSize(pred.size(), target.size());
  detail::CheckMask(mask, pred.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) count += detail::Active(mask, i) ? 1 : 0;
  std::vector<double> grad(pred.size(), 0.0);
  if (count == 0) return grad;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!detail::Active(mask, i)) continue;
    const double d = pred[i] - target[i];
    grad[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / static_cast<double>(count);
  }
  return grad;
}

/// Mean binary cross entropy over active entries.
inline double BceLoss(std::span<const double> pred, std::span<const double> target,
                      std::span<const std::uint8_t> mask = {}) {
  detail::CheckSameSize(pred.size(), target.size());
  detail::CheckMask(mask, pred.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!detail::Active(mask, i)) continue;
    const double p = ClampProbability(pred[i]);
    sum -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

inline std::vector<double> BceLossGradient(std::span<const double> pred, std::span<const double> target,
                                           std::span<const std::uint8_t> mask = {}) {
  detail::CheckSameSize(pred.size(), target.size());
  detail::CheckMask(mask, pred.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) count += detail::Active(mask, i) ? 1 : 0;
  std::vector<double> grad(pred.size(), 0.0);
  if (count == 0) return grad;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!detail::Active(mask, i)) continue;
    const double p = ClampProbability(pred[i]);
    grad[i] = (p - target[i]) / (p * (1.0 - p)) / static_cast<double>(count);
  }
  return grad;
}

}  // namespace cfusion
