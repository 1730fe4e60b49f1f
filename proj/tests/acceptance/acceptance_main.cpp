// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cfusion/cfusion.hpp"
#include "oracles.hpp"

using namespace cfusion;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

SynthConfig LoadConfig(const std::string& name) {
  return SynthConfigFromJson(ReadJsonFile(std::string(CFUSION_SOURCE_DIR) + "/configs/" + name));
}

// --- 1 ---------------------------------------------------------------------
Outcome NdsFormula() {
  const double a = Nds(0.332, {0.649, 0.263, 0.535, 0.540, 0.142});
  const double b = Nds(0.306, {0.716, 0.264, 0.609, 1.426, 0.658});
  const bool pass = std::abs(a - 0.453) <= 0.0005 && std::abs(b - 0.328) <= 0.0005;
  return {pass, Fmt("NDS %.4f (reference 0.453), %.4f (reference 0.328)", a, b)};
}

// --- 2 ---------------------------------------------------------------------
Outcome MetricSelfConsistency() {
  const SynthConfig cfg = LoadConfig("default.json");
  std::vector<EvalSample> samples;
  std::size_t boxes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EvalSample s;
    s.gts = GenerateScene(cfg, seed).gt_boxes;
    s.preds = s.gts;
    for (Box3D& p : s.preds) p.score = 1.0;
    boxes += s.gts.size();
    samples.push_back(std::move(s));
  }
  const MetricReport r = Evaluate(samples);
  const TpErrors& e = r.mean_errors;
  const bool pass = r.map == 1.0 && e.ate == 0.0 && e.ase == 0.0 && e.aoe == 0.0 && e.ave == 0.0 && e.aae == 0.0 &&
                    r.nds == 1.0;
  return {pass, Fmt("%zu boxes: mAP %.17g, errors (%g, %g, %g, %g, %g), NDS %.17g", boxes, r.map, e.ate, e.ase,
                    e.aoe, e.ave, e.aae, r.nds)};
}

// --- 3 ---------------------------------------------------------------------
Outcome AssociationOracle() {
  std::mt19937_64 rng(20240601);
  std::size_t discrepancies = 0, objects = 0, pillars = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto c = oracle::MakeRandomAssociationCase(rng, 50, 500);
    const FrustumMode mode = t % 2 ? FrustumMode::kTrain : FrustumMode::kTest;
    const double delta = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    const bool corners = t % 4 != 3;
    const auto got =
        Associate(c.dets, c.pillars, c.cam, {delta, mode, corners ? Membership::kPillar : Membership::kPointOnly});
    const auto want = oracle::BruteForceAssociate(c.dets, c.pillars, c.cam, delta, mode, corners);
    objects += c.dets.size();
    pillars += c.pillars.size();
    if (got.size() != want.size()) {
      discrepancies += std::max(got.size(), want.size());
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) discrepancies += !(got[i] == want[i]);
  }
  return {discrepancies == 0,
          Fmt("1000 scenes, %zu objects, %zu pillars, %zu discrepancies", objects, pillars, discrepancies)};
}

// --- 4 ---------------------------------------------------------------------
AssociationScore ScoreRun(const SynthConfig& cfg, std::uint64_t seed, bool pillars) {
  PipelineConfig pc;
  pc.pillar_expansion = pillars;
  pc.build_features = false;
  return ScoreAssociations(RunPipeline(GenerateScene(cfg, seed), pc));
}

Outcome PillarExpansion() {
  const SynthConfig corrupt = LoadConfig("zcorrupt.json");
  SynthConfig clean = corrupt;
  clean.radar.z_mode = RadarZMode::kExact;
  AssociationScore clean_point, clean_pillar, corrupt_point, corrupt_pillar;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    clean_point += ScoreRun(clean, seed, false);
    clean_pillar += ScoreRun(clean, seed, true);
    corrupt_point += ScoreRun(corrupt, seed, false);
    corrupt_pillar += ScoreRun(corrupt, seed, true);
  }
  const double base = clean_pillar.Recall();
  const double ratio = base > 0 ? corrupt_pillar.Recall() / base : 0.0;
  const bool drops = corrupt_point.Recall() < clean_point.Recall();
  return {drops && ratio >= 0.95,
          Fmt("recall noiseless %.3f (point-only %.3f); z-corrupted point-only %.3f, pillars %.3f; recovered %.1f%%",
              base, clean_point.Recall(), corrupt_point.Recall(), corrupt_pillar.Recall(), 100 * ratio)};
}

// --- 5 ---------------------------------------------------------------------
// Fraction of objects whose image box overlaps that of an object at least 2 m
// farther or nearer along the line of sight.
double OccludedFraction(const Scene& s) {
  std::size_t occluded = 0;
  std::vector<Box2D> boxes;
  std::vector<double> ranges;
  for (const Box3D& b : s.gt_boxes) {
    boxes.push_back(Box3dToBox2d(b, s.camera));
    ranges.push_back(s.camera.EgoToCamera(b.center).norm());
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (i == j || std::abs(ranges[i] - ranges[j]) < 2.0) continue;
      const bool overlap = boxes[i].left() < boxes[j].right() && boxes[j].left() < boxes[i].right() &&
                           boxes[i].top() < boxes[j].bottom() && boxes[j].top() < boxes[i].bottom();
      if (overlap) {
        ++occluded;
        break;
      }
    }
  }
  return static_cast<double>(occluded);
}

Outcome FrustumVsImageBox() {
  const SynthConfig cfg = LoadConfig("occlusion.json");
  AssociationScore frustum, naive;
  double occluded = 0;
  std::size_t objects = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Scene s = GenerateScene(cfg, seed);
    occluded += OccludedFraction(s);
    objects += s.gt_boxes.size();
    PipelineConfig pc;
    pc.build_features = false;
    frustum += ScoreAssociations(RunPipeline(s, pc));
    pc.method = AssociationMethod::kImageBox;
    naive += ScoreAssociations(RunPipeline(s, pc));
  }
  const double occ_rate = objects ? occluded / objects : 0.0;
  const double margin = frustum.Recall() - naive.Recall();
  return {occ_rate >= 0.30 && margin >= 0.10,
          Fmt("%.1f%% of objects in occluding pairs; correct association frustum %.3f vs 2D-box %.3f "
              "(margin %.1f pp)",
              100 * occ_rate, frustum.Recall(), naive.Recall(), 100 * margin)};
}

// --- 6 ---------------------------------------------------------------------
Outcome FusionImprovesDepthAndVelocity() {
  const SynthConfig cfg = LoadConfig("default.json");
  PipelineConfig fused;
  fused.build_features = false;
  PipelineConfig camera = fused;
  camera.fuse = false;
  double ate_f = 0, ate_c = 0, ave_f = 0, ave_c = 0;
  std::size_t n = 0, matched = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const Scene s = GenerateScene(cfg, seed);
    const PipelineResult a = RunPipeline(s, fused);
    const PipelineResult b = RunPipeline(s, camera);
    matched += a.diagnostics.matched;
    for (std::size_t i = 0; i < s.gt_boxes.size(); ++i) {
      const Box3D& g = s.gt_boxes[i];
      ate_f += BevDistance(a.detections[i], g);
      ate_c += BevDistance(b.detections[i], g);
      ave_f += (a.detections[i].velocity - g.velocity).norm();
      ave_c += (b.detections[i].velocity - g.velocity).norm();
      ++n;
    }
  }
  const double ate_red = 1.0 - ate_f / ate_c;
  const double ave_red = 1.0 - ave_f / ave_c;
  return {ate_red >= 0.30 && ave_red >= 0.80,
          Fmt("%zu objects (%.1f%% associated): ATE %.3f -> %.3f m (-%.1f%%), AVE %.3f -> %.3f m/s (-%.1f%%)", n,
              100.0 * matched / n, ate_c / n, ate_f / n, 100 * ate_red, ave_c / n, ave_f / n, 100 * ave_red)};
}

// --- 7 ---------------------------------------------------------------------
Outcome HeatmapSuite() {
  std::mt19937_64 rng(7);
  auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const int stride = 4, gw = 200, gh = 113;
  std::size_t center_bad = 0, sigma_bad = 0, max_bad = 0, mono_bad = 0;
  double worst_sigma_err = 0;
  for (int t = 0; t < 1000; ++t) {
    // Box sized so sigma is a whole number of cells k.
    const int k = 1 + static_cast<int>(U(0, 4));
    const double aspect = U(0.3, 3.0);
    double lo = 1, hi = 2000;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (GaussianSigma(mid, mid * aspect, kDefaultMinOverlap, stride) < k ? lo : hi) = mid;
    }
    const double w = 0.5 * (lo + hi);
    HeatmapAnnotation a{Vec2(U(40, 760), U(40, 410)), 0, Box2D{0, 0, w, w * aspect, false}};
    a.box2d.cx = a.center_px.x();
    a.box2d.cy = a.center_px.y();
    const Plane p = RenderGtHeatmap(std::vector{a}, 1, gw, gh, stride)[0];
    const auto [qx, qy] = QuantizeCenter(a.center_px, stride);
    center_bad += p.at(qx, qy) != 1.0;
    for (auto [dx, dy] : {std::pair{k, 0}, {-k, 0}, {0, k}, {0, -k}}) {
      if (!p.contains(qx + dx, qy + dy)) continue;
      const double err = std::abs(p.at(qx + dx, qy + dy) - std::exp(-0.5));
      worst_sigma_err = std::max(worst_sigma_err, err);
      sigma_bad += err > 1e-9;
    }
    // Monotone decay: ordering cells by distance never raises the value.
    std::vector<std::pair<int, double>> by_dist;
    by_dist.reserve(p.data.size());
    for (int y = 0; y < gh; ++y)
      for (int x = 0; x < gw; ++x) by_dist.push_back({(x - qx) * (x - qx) + (y - qy) * (y - qy), p.at(x, y)});
    std::sort(by_dist.begin(), by_dist.end());
    for (std::size_t i = 1; i < by_dist.size(); ++i) {
      if (by_dist[i].first > by_dist[i - 1].first && by_dist[i].second > by_dist[i - 1].second) ++mono_bad;
      if (by_dist[i].first == by_dist[i - 1].first && by_dist[i].second != by_dist[i - 1].second) ++mono_bad;
    }
    // Max combination with a second random object of the same class.
    HeatmapAnnotation b{Vec2(U(0, 799), U(0, 449)), 0, Box2D{0, 0, U(8, 300), U(8, 300), false}};
    const Plane q = RenderGtHeatmap(std::vector{b}, 1, gw, gh, stride)[0];
    const Plane both = RenderGtHeatmap(std::vector{a, b}, 1, gw, gh, stride)[0];
    for (std::size_t i = 0; i < both.data.size(); ++i) max_bad += both.data[i] != std::max(p.data[i], q.data[i]);
  }
  const bool pass = center_bad == 0 && sigma_bad == 0 && max_bad == 0 && mono_bad == 0;
  return {pass, Fmt("1000 annotations: center!=1 %zu, |value at sigma - e^-0.5| max %.2e, max-combine violations "
                    "%zu, monotonicity violations %zu",
                    center_bad, worst_sigma_err, max_bad, mono_bad)};
}

// --- 8 ---------------------------------------------------------------------
Outcome GradientChecks() {
  std::mt19937_64 rng(8);
  auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  using V = std::vector<double>;
  double worst = 0;
  std::size_t checked = 0;
  auto compare = [&](const V& ana, const V& num) {
    for (std::size_t i = 0; i < ana.size(); ++i) {
      const double scale = std::max({std::abs(ana[i]), std::abs(num[i]), 1e-3});
      worst = std::max(worst, std::abs(ana[i] - num[i]) / scale);
      ++checked;
    }
  };
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 8 + static_cast<std::size_t>(U(0, 24));
    V pred(n), gt(n), tgt(n), reg(n), reg_t(n);
    std::vector<std::uint8_t> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = U(0.02, 0.98);
      gt[i] = U(0, 1) < 0.2 ? 1.0 : U(0, 0.95);
      tgt[i] = U(0, 1) < 0.5 ? 0.0 : 1.0;
      mask[i] = U(0, 1) < 0.8;
      reg[i] = U(-10, 10);
      reg_t[i] = reg[i] + (U(0, 1) < 0.5 ? -1 : 1) * U(0.01, 5);  // away from the kink
    }
    gt[0] = 1.0;
    compare(FocalLossGradient(pred, gt), oracle::NumericGradient([&](const V& x) { return FocalLoss(x, gt); }, pred, 1e-6));
    compare(L1LossGradient(reg, reg_t, mask),
            oracle::NumericGradient([&](const V& x) { return L1Loss(x, reg_t, mask); }, reg, 1e-6));
    compare(BceLossGradient(pred, tgt, mask),
            oracle::NumericGradient([&](const V& x) { return BceLoss(x, tgt, mask); }, pred, 1e-6));
  }
  return {worst <= 1e-5, Fmt("%zu partials over 100 inputs x 3 losses, worst relative error %.2e", checked, worst)};
}

// --- 9 ---------------------------------------------------------------------
Outcome NoiselessIdentity() {
  const SynthConfig cfg = LoadConfig("noiseless.json");
  double worst_center = 0, worst_yaw = 0;
  std::size_t mismatched = 0, objects = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene s = GenerateScene(cfg, seed);
    const PipelineResult r = RunPipeline(s, {});
    if (r.detections.size() != s.gt_boxes.size()) {
      mismatched += s.gt_boxes.size();
      continue;
    }
    for (std::size_t i = 0; i < s.gt_boxes.size(); ++i) {
      const Box3D& g = s.gt_boxes[i];
      const Box3D& d = r.detections[i];
      worst_center = std::max(worst_center, (d.center - g.center).norm());
      worst_yaw = std::max(worst_yaw, std::abs(NormalizeAngle(d.yaw - g.yaw)));
      mismatched += d.class_id != g.class_id || d.attribute_id != g.attribute_id;
      ++objects;
    }
  }
  return {worst_center < 1e-3 && worst_yaw < 1e-6 && mismatched == 0,
          Fmt("%zu objects: worst center error %.2e m, worst yaw error %.2e rad, class/attribute mismatches %zu",
              objects, worst_center, worst_yaw, mismatched)};
}

// --- 10 --------------------------------------------------------------------
int Shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string DirBytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const fs::path& f : files) {
    std::ifstream is(f, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    all += f.filename().string() + "\n" + ss.str();
  }
  return all;
}

Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() / "cfusion_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = std::string("\"") + CFUSION_CLI_PATH + "\"";
  const std::string scenes = (root / "scenes").string();
  if (Shell(cli + " synth --config \"" + CFUSION_SOURCE_DIR + "/configs/default.json\" --seeds 0..39 --out \"" +
            scenes + "\"") != 0) {
    return {false, "synth failed"};
  }
  std::vector<std::string> outputs;
  for (int threads : {1, 4, 8}) {
    const std::string out = (root / ("out" + std::to_string(threads))).string();
    if (Shell(cli + " --threads " + std::to_string(threads) + " run --scenes \"" + scenes +
              "\" --delta 0.2 --alpha 0.3 --pillar 0.2,0.2,1.5 --mode test --out \"" + out + "\"") != 0) {
      return {false, Fmt("run failed at %d threads", threads)};
    }
    outputs.push_back(DirBytes(out));
  }
  const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2] && !outputs[0].empty();
  fs::remove_all(root);
  return {same, Fmt("40 scenes at 1/4/8 threads: %s (%zu bytes each)", same ? "identical" : "DIFFERENT",
                    outputs[0].size())};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0: none
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "NDS formula validation", 1.0, NdsFormula},
      {2, "metric self-consistency", 10.0, MetricSelfConsistency},
      {3, "association oracle equivalence", 60.0, AssociationOracle},
      {4, "pillar expansion under z corruption", 120.0, PillarExpansion},
      {5, "frustum vs 2D-box association", 0.0, FrustumVsImageBox},
      {6, "fusion improves depth and velocity", 0.0, FusionImprovesDepthAndVelocity},
      {7, "heatmap properties", 0.0, HeatmapSuite},
      {8, "loss gradient checks", 0.0, GradientChecks},
      {9, "end-to-end noiseless identity", 0.0, NoiselessIdentity},
      {10, "determinism across thread counts", 0.0, Determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = Fmt("%.2f s", secs);
    if (c.time_limit_s > 0) {
      timing += Fmt(" (limit %.0f s)", c.time_limit_s);
      if (secs >= c.time_limit_s) {
        o.pass = false;
        o.detail += "; over time limit";
      }
    }
    failures += !o.pass;
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << "  | " << o.detail
              << "  [" << timing << "]" << std::endl;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all passed")
            << std::endl;
  return failures ? 1 : 0;
}
