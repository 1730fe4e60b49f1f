#pragma once

// Detection evaluation in the style of the nuScenes detection benchmark:
// center-distance matching, per-class AP over distance thresholds, true
// positive error means and the composite detection score (NDS).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cfusion/geometry.hpp"

namespace cfusion {

struct MetricConfig {
  std::vector<double> dist_thresholds = {0.5, 1.0, 2.0, 4.0};
  double tp_threshold = 2.0;
  double min_recall = 0.1;
  double min_precision = 0.1;
};

/// Predictions and ground truth of one sample (scene), in a common frame.
struct EvalSample {
  std::vector<Box3D> preds;
  std::vector<Box3D> gts;
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (pred, gt)
  std::vector<std::size_t> unmatched_preds;
  std::vector<std::size_t> unmatched_gts;
};

inline double BevDistance(const Box3D& a, const Box3D& b) {
  return std::hypot(a.center.x() - b.center.x(), a.center.y() - b.center.y());
}

/// Prediction indices by descending score, ties in input order.
inline std::vector<std::size_t> ScoreOrder(std::span<const Box3D> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  return order;
}

namespace detail {
// Nearest unmatched same-class ground truth within `threshold`; ties go to the
// lower index.
inline std::optional<std::size_t> NearestFreeGt(const Box3D& pred, std::span<const Box3D> gts,
                                                const std::vector<char>& taken, double threshold) {
  std::optional<std::size_t> best;
  double best_dist = 0.0;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (taken[g] || gts[g].class_id != pred.class_id) continue;
    const double d = BevDistance(pred, gts[g]);
    if (d <= threshold && (!best || d < best_dist)) {
      best = g;
      best_dist = d;
    }
  }
  return best;
}
}  // namespace detail

/// Greedy one-to-one matching in descending prediction score.
inline MatchResult MatchDetections(std::span<const Box3D> preds, std::span<const Box3D> gts, double threshold) {
  MatchResult out;
  std::vector<char> taken(gts.size(), 0);
  for (std::size_t p : ScoreOrder(preds)) {
    if (auto g = detail::NearestFreeGt(preds[p], gts, taken, threshold)) {
      taken[*g] = 1;
      out.matches.emplace_back(p, *g);
    } else {
      out.unmatched_preds.push_back(p);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) out.unmatched_gts.push_back(g);
  }
  return out;
}

// Area under the precision/recall curve of a ranked detection list. Precision
// is sampled at 101 evenly spaced recall values (linear interpolation between
// operating points, 0 beyond the highest recall reached); samples at recall
// <= min_recall are dropped and the remainder are rescaled by
// (p - min_precision) / (1 - min_precision), floored at 0, and averaged.
inline double AveragePrecision(std::span<const std::uint8_t> ranked_is_tp, std::size_t num_gt,
                               const MetricConfig& cfg = {}) {
  if (num_gt == 0 || ranked_is_tp.empty()) return 0.0;
  std::vector<double> rec;
  std::vector<double> prec;
  double tp = 0.0;
  for (std::size_t i = 0; i < ranked_is_tp.size(); ++i) {
    tp += ranked_is_tp[i] ? 1.0 : 0.0;
    prec.push_back(tp / static_cast<double>(i + 1));
    rec.push_back(tp / static_cast<double>(num_gt));
  }
  auto precision_at = [&](double r) {
    if (r < rec.front()) return prec.front();
    if (r > rec.back()) return 0.0;
    // Last operating point with recall <= r.
    const auto j = static_cast<std::size_t>(std::upper_bound(rec.begin(), rec.end(), r) - rec.begin()) - 1;
    if (j + 1 >= rec.size() || rec[j] == r) return prec[j];
    const double t = (r - rec[j]) / (rec[j + 1] - rec[j]);
    return prec[j] + t * (prec[j + 1] - prec[j]);
  };
  constexpr int kSamples = 101;
  const int first = static_cast<int>(std::round(100.0 * cfg.min_recall)) + 1;
  double sum = 0.0;
  int count = 0;
  for (int k = first; k < kSamples; ++k) {
    const double p = precision_at(static_cast<double>(k) / 100.0);
    sum += std::max(0.0, (p - cfg.min_precision) / (1.0 - cfg.min_precision));
    ++count;
  }
  return count == 0 ? 0.0 : sum / count;
}

struct TpErrors {
  double ate = 1.0;  // m
  double ase = 1.0;
  double aoe = 1.0;  // rad
  double ave = 1.0;  // m/s
  double aae = 1.0;

  std::array<double, 5> values() const { return {ate, ase, aoe, ave, aae}; }
  bool operator==(const TpErrors&) const = default;
};

/// 1 - IoU of the two boxes after aligning centers and headings.
inline double ScaleError(const Box3D& pred, const Box3D& gt) {
  const Vec3 inter_dims = pred.dims.cwiseMin(gt.dims);
  const double inter = inter_dims.prod();
  const double uni = pred.dims.prod() + gt.dims.prod() - inter;
  return 1.0 - inter / uni;
}

inline double OrientationError(const Box3D& pred, const Box3D& gt) {
  return std::abs(NormalizeAngle(pred.yaw - gt.yaw));
}

/// Means over matched pairs; an error with no contributing pair is 1. Pairs
/// whose ground truth has no attribute do not count toward AAE.
inline TpErrors ComputeTpErrors(std::span<const std::pair<Box3D, Box3D>> pairs) {
  TpErrors e;
  if (pairs.empty()) return e;
  double ate = 0, ase = 0, aoe = 0, ave = 0;
  double attr_wrong = 0;
  std::size_t attr_count = 0;
  for (const auto& [pred, gt] : pairs) {
    ate += BevDistance(pred, gt);
    ase += ScaleError(pred, gt);
    aoe += OrientationError(pred, gt);
    ave += (pred.velocity - gt.velocity).norm();
    if (gt.attribute_id >= 0) {
      attr_wrong += pred.attribute_id == gt.attribute_id ? 0.0 : 1.0;
      ++attr_count;
    }
  }
  const double n = static_cast<double>(pairs.size());
  e.ate = ate / n;
  e.ase = ase / n;
  e.aoe = aoe / n;
  e.ave = ave / n;
  e.aae = attr_count == 0 ? 1.0 : attr_wrong / static_cast<double>(attr_count);
  return e;
}

inline double Nds(double map, const TpErrors& errors) {
  double sum = 5.0 * map;
  for (double err : errors.values()) sum += 1.0 - std::min(1.0, err);
  return sum / 10.0;
}

struct ClassMetrics {
  std::vector<double> ap;  // one per distance threshold
  double mean_ap = 0.0;
  TpErrors errors;
  std::size_t num_gt = 0;
  std::size_t num_pred = 0;
};

struct MetricReport {
  std::vector<double> dist_thresholds;
  std::map<int, ClassMetrics> per_class;  // only classes with ground truth
  double map = 0.0;
  TpErrors mean_errors;
  double nds = 0.0;
};

namespace detail {
struct RankedPred {
  std::size_t sample;
  std::size_t index;
  double score;
};

// Dataset-wide greedy matching for one class: predictions from every sample
// are ranked together, each matched only against its own sample's ground truth.
inline std::vector<std::uint8_t> MatchClass(std::span<const EvalSample> samples, int class_id, double threshold,
                                            std::vector<std::pair<Box3D, Box3D>>* pairs) {
  std::vector<RankedPred> ranked;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (std::size_t i = 0; i < samples[s].preds.size(); ++i) {
      if (samples[s].preds[i].class_id == class_id) ranked.push_back({s, i, samples[s].preds[i].score});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedPred& a, const RankedPred& b) { return a.score > b.score; });
  std::vector<std::vector<char>> taken(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) taken[s].assign(samples[s].gts.size(), 0);

  std::vector<std::uint8_t> is_tp;
  is_tp.reserve(ranked.size());
  for (const RankedPred& r : ranked) {
    const Box3D& pred = samples[r.sample].preds[r.index];
    auto g = NearestFreeGt(pred, samples[r.sample].gts, taken[r.sample], threshold);
    if (g) {
      taken[r.sample][*g] = 1;
      if (pairs) pairs->emplace_back(pred, samples[r.sample].gts[*g]);
    }
    is_tp.push_back(g ? 1 : 0);
  }
  return is_tp;
}
}  // namespace detail

inline MetricReport Evaluate(std::span<const EvalSample> samples, const MetricConfig& cfg = {}) {
  MetricReport report;
  report.dist_thresholds = cfg.dist_thresholds;
  std::map<int, std::size_t> gt_count;
  std::map<int, std::size_t> pred_count;
  for (const EvalSample& s : samples) {
    for (const Box3D& g : s.gts) ++gt_count[g.class_id];
    for (const Box3D& p : s.preds) ++pred_count[p.class_id];
  }
  if (gt_count.empty()) {
    report.mean_errors = TpErrors{};
    report.nds = Nds(0.0, report.mean_errors);
    return report;
  }
  std::array<double, 5> err_sum{};
  double ap_sum = 0.0;
  for (const auto& [class_id, num_gt] : gt_count) {
    ClassMetrics cm;
    cm.num_gt = num_gt;
    cm.num_pred = pred_count[class_id];
    for (double th : cfg.dist_thresholds) {
      cm.ap.push_back(AveragePrecision(detail::MatchClass(samples, class_id, th, nullptr), num_gt, cfg));
    }
    cm.mean_ap = cm.ap.empty() ? 0.0 : std::accumulate(cm.ap.begin(), cm.ap.end(), 0.0) / cm.ap.size();
    std::vector<std::pair<Box3D, Box3D>> pairs;
    detail::MatchClass(samples, class_id, cfg.tp_threshold, &pairs);
    cm.errors = ComputeTpErrors(pairs);
    ap_sum += cm.mean_ap;
    const auto v = cm.errors.values();
    for (std::size_t k = 0; k < 5; ++k) err_sum[k] += v[k];
    report.per_class.emplace(class_id, std::move(cm));
  }
  const double n = static_cast<double>(gt_count.size());
  report.map = ap_sum / n;
  report.mean_errors = {err_sum[0] / n, err_sum[1] / n, err_sum[2] / n, err_sum[3] / n, err_sum[4] / n};
  report.nds = Nds(report.map, report.mean_errors);
  return report;
}

/// Plain-text summary with the columns NDS, mAP, mATE, mASE, mAOE, mAVE, mAAE,
/// followed by a per-class breakdown.
inline std::string FormatReportTable(const MetricReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << std::left << std::setw(10) << "" << std::right;
  for (const char* h : {"NDS", "mAP", "mATE", "mASE", "mAOE", "mAVE", "mAAE"}) os << std::setw(8) << h;
  os << "\n" << std::left << std::setw(10) << "overall" << std::right << std::setw(8) << r.nds << std::setw(8)
     << r.map;
  for (double v : r.mean_errors.values()) os << std::setw(8) << v;
  os << "\n\n" << std::left << std::setw(10) << "class" << std::right << std::setw(8) << "AP";
  for (double th : r.dist_thresholds) {
    std::ostringstream h;
    h << std::setprecision(1) << std::fixed << "AP@" << th;
    os << std::setw(8) << h.str();
  }
  for (const char* h : {"ATE", "ASE", "AOE", "AVE", "AAE"}) os << std::setw(8) << h;
  os << "\n";
  for (const auto& [cls, cm] : r.per_class) {
    os << std::left << std::setw(10) << cls << std::right << std::setw(8) << cm.mean_ap;
    for (double ap : cm.ap) os << std::setw(8) << ap;
    for (double v : cm.errors.values()) os << std::setw(8) << v;
    os << "\n";
  }
  return os.str();
}

}  // namespace cfusion
