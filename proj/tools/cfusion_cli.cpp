// Command-line front end: synth, run, eval, render.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfusion/cfusion.hpp"

namespace fs = std::filesystem;
using namespace cfusion;

namespace {

// Exit status by failure category.
enum Exit : int {
  kOk = 0,
  kUsage = 2,
  kParseFailure = 3,
  kIoFailure = 4,
  kInvalidInput = 5,
  kComputation = 6,
  kInternal = 70,
};

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return kParseFailure;
    case ErrorCode::kIo: return kIoFailure;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kMissingSecondary: return kInvalidInput;
    case ErrorCode::kPointBehindCamera:
    case ErrorCode::kFullyBehindCamera:
    case ErrorCode::kDegeneratePosition:
    case ErrorCode::kInvalidDepth:
    case ErrorCode::kDegenerateBox:
    case ErrorCode::kDomain: return kComputation;
  }
  return kInternal;
}

std::pair<std::uint64_t, std::uint64_t> ParseSeedRange(const std::string& text) {
  auto parse = [&](const std::string& s) -> std::uint64_t {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || s[0] == '-') {
      throw Error(ErrorCode::kInvalidArgument, "bad seed range '" + text + "' (expected A..B)");
    }
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    const auto v = parse(text);
    return {v, v};
  }
  const auto lo = parse(text.substr(0, dots));
  const auto hi = parse(text.substr(dots + 2));
  if (hi < lo) throw Error(ErrorCode::kInvalidArgument, "empty seed range '" + text + "'");
  return {lo, hi};
}

std::array<double, 3> ParseTriple(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) items.push_back(item);
  if (items.size() != 3) {
    throw Error(ErrorCode::kInvalidArgument, "expected three comma-separated values, got '" + text + "'");
  }
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t used = 0;
    try {
      out[i] = std::stod(items[i], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != items[i].size()) {
      throw Error(ErrorCode::kInvalidArgument, "bad number '" + items[i] + "' in '" + text + "'");
    }
  }
  return out;
}

std::vector<fs::path> JsonFilesIn(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void EnsureDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::kIo, "cannot create directory " + dir.string());
}

struct SynthArgs {
  std::string config;
  std::string seeds = "0..9";
  std::string out;
};

struct RunArgs {
  std::string scenes;
  std::string out;
  double delta = kDefaultFrustumDelta;
  double alpha = kDefaultRadarExtent;
  std::string pillar = "0.2,0.2,1.5";
  std::string mode = "test";
  std::string association = "frustum";
  bool no_fuse = false;
  bool point_only = false;
  bool features = false;
  std::string diagnostics;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out;
};

struct RenderArgs {
  std::string scene;
  std::string pred;
  std::string out;
  double range = 60.0;
  double scale = 8.0;
};

void CmdSynth(const SynthArgs& a, std::size_t threads) {
  const SynthConfig cfg = SynthConfigFromJson(ReadJsonFile(a.config));
  const auto [lo, hi] = ParseSeedRange(a.seeds);
  EnsureDirectory(a.out);
  const std::size_t n = static_cast<std::size_t>(hi - lo) + 1;
  ParallelMap(n, threads, [&](std::size_t i) {
    const Scene scene = GenerateScene(cfg, lo + i);
    SaveScene(scene, fs::path(a.out) / (scene.scene_id + ".json"));
    return 0;
  });
  spdlog::info("wrote {} scenes to {}", n, a.out);
}

void CmdRun(const RunArgs& a, std::size_t threads) {
  PipelineConfig cfg;
  cfg.delta = a.delta;
  cfg.alpha = a.alpha;
  cfg.pillar_dims = ParseTriple(a.pillar);
  if (a.mode == "test") {
    cfg.mode = FrustumMode::kTest;
  } else if (a.mode == "train") {
    cfg.mode = FrustumMode::kTrain;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "mode must be 'test' or 'train'");
  }
  if (a.association == "frustum") {
    cfg.method = AssociationMethod::kFrustum;
  } else if (a.association == "image-box") {
    cfg.method = AssociationMethod::kImageBox;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "association must be 'frustum' or 'image-box'");
  }
  cfg.fuse = !a.no_fuse;
  cfg.pillar_expansion = !a.point_only;
  cfg.build_features = a.features;

  const auto files = JsonFilesIn(a.scenes);
  EnsureDirectory(a.out);
  struct Outcome {
    std::string scene_id;
    PipelineDiagnostics diag;
  };
  const auto outcomes = ParallelMap(files.size(), threads, [&](std::size_t i) {
    const Scene scene = LoadScene(files[i]);
    PipelineResult r = RunPipeline(scene, cfg);
    WriteTextFile(fs::path(a.out) / (scene.scene_id + ".json"), DumpJson(DetectionsToJson(scene.scene_id, r.detections)));
    if (r.features) WriteFeatureStack(*r.features, (fs::path(a.out) / (scene.scene_id + ".cffm")).string());
    spdlog::debug("{}: {} objects, {} matched, {} pillars", scene.scene_id, r.diagnostics.num_objects,
                  r.diagnostics.matched, r.diagnostics.num_pillars);
    return Outcome{scene.scene_id, std::move(r.diagnostics)};
  });

  std::size_t objects = 0, matched = 0, multi = 0;
  std::map<std::string, double> stage_ms;
  Json per_scene = Json::array();
  for (const Outcome& o : outcomes) {
    objects += o.diag.num_objects;
    matched += o.diag.matched;
    multi += o.diag.multi_claims;
    Json timings = Json::object();
    for (const StageTiming& t : o.diag.timings) {
      stage_ms[t.stage] += t.ms;
      timings[t.stage] = t.ms;
    }
    per_scene.push_back({{"scene_id", o.scene_id},
                         {"num_objects", o.diag.num_objects},
                         {"matched", o.diag.matched},
                         {"unmatched", o.diag.unmatched},
                         {"multi_claims", o.diag.multi_claims},
                         {"num_points", o.diag.num_points},
                         {"num_pillars", o.diag.num_pillars},
                         {"association_rate", o.diag.association_rate},
                         {"timings_ms", timings}});
  }
  spdlog::info("ran {} scenes: {} objects, {} associated ({:.1f}%), {} multi-claimed pillars", files.size(),
               objects, matched, objects ? 100.0 * matched / objects : 0.0, multi);
  for (const auto& [stage, ms] : stage_ms) spdlog::debug("stage {}: {:.2f} ms total", stage, ms);
  if (!a.diagnostics.empty()) WriteTextFile(a.diagnostics, DumpJson({{"scenes", per_scene}}));
}

void CmdEval(const EvalArgs& a) {
  std::map<std::string, std::vector<Box3D>> preds;
  for (const fs::path& f : JsonFilesIn(a.pred)) {
    SceneDetections d;
    try {
      d = DetectionsFromJson(ReadJsonFile(f));
    } catch (const Error& e) {
      throw Error(e.code(), f.string() + ": " + e.detail());
    }
    preds[d.scene_id] = std::move(d.boxes);
  }
  std::vector<EvalSample> samples;
  std::size_t missing = 0;
  for (const fs::path& f : JsonFilesIn(a.gt)) {
    Scene scene = LoadScene(f);
    EvalSample s;
    s.gts = std::move(scene.gt_boxes);
    auto it = preds.find(scene.scene_id);
    if (it != preds.end()) {
      s.preds = std::move(it->second);
    } else {
      ++missing;
    }
    samples.push_back(std::move(s));
  }
  if (missing) spdlog::warn("{} scenes have no prediction file; scored as empty", missing);
  const MetricReport report = Evaluate(samples);
  WriteTextFile(a.out, DumpJson(ToJson(report)));
  std::cout << FormatReportTable(report);
}

void CmdRender(const RenderArgs& a) {
  const Scene scene = LoadScene(a.scene);
  std::vector<Box3D> dets;
  if (!a.pred.empty()) {
    try {
      dets = DetectionsFromJson(ReadJsonFile(a.pred)).boxes;
    } catch (const Error& e) {
      throw Error(e.code(), a.pred + ": " + e.detail());
    }
  }
  BevView view;
  if (!(a.range > 0.0) || !(a.scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "range and scale must be positive");
  view.x_max = a.range;
  view.y_half = a.range / 2.0;
  view.pixels_per_meter = a.scale;
  RenderBev(scene, dets, view).WritePpm(a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-radar center fusion toolkit"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  std::string log_level = "info";
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 256));
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic scenes");
  s->add_option("--config", synth.config, "Synth config JSON")->required();
  s->add_option("--seeds", synth.seeds, "Seed range A..B (inclusive)");
  s->add_option("--out", synth.out, "Output directory")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the fusion pipeline over a scene directory");
  r->add_option("--scenes", run.scenes, "Scene directory")->required();
  r->add_option("--out", run.out, "Detection output directory")->required();
  r->add_option("--delta", run.delta, "Frustum radial enlargement")->check(CLI::NonNegativeNumber);
  r->add_option("--alpha", run.alpha, "Radar feature extent")->check(CLI::PositiveNumber);
  r->add_option("--pillar", run.pillar, "Pillar size w,l,h in meters");
  r->add_option("--mode", run.mode, "test or train")->check(CLI::IsMember({"test", "train"}));
  r->add_option("--association", run.association, "frustum or image-box")
      ->check(CLI::IsMember({"frustum", "image-box"}));
  r->add_flag("--no-fuse", run.no_fuse, "Decode from primary heads only");
  r->add_flag("--point-only", run.point_only, "Test radar points instead of pillars");
  r->add_flag("--features", run.features, "Also write feature planes (.cffm)");
  r->add_option("--diagnostics", run.diagnostics, "Write per-scene diagnostics JSON here");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score detections against scene ground truth");
  e->add_option("--pred", eval.pred, "Detection directory")->required();
  e->add_option("--gt", eval.gt, "Scene directory")->required();
  e->add_option("--out", eval.out, "Report JSON")->required();

  RenderArgs render;
  auto* v = app.add_subcommand("render", "Draw a bird's-eye view (PPM)");
  v->add_option("--scene", render.scene, "Scene JSON")->required();
  v->add_option("--pred", render.pred, "Detection JSON");
  v->add_option("--out", render.out, "Output image (.ppm)")->required();
  v->add_option("--range", render.range, "Forward range in meters");
  v->add_option("--scale", render.scale, "Pixels per meter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  auto logger = spdlog::stderr_color_mt("cfusion");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");

  try {
    if (*s) CmdSynth(synth, threads);
    if (*r) CmdRun(run, threads);
    if (*e) CmdEval(eval);
    if (*v) CmdRender(render);
  } catch (const Error& err) {
    spdlog::error("{}", err.what());
    return ExitCodeFor(err.code());
  } catch (const std::exception& err) {
    spdlog::error("internal: {}", err.what());
    return kInternal;
  }
  return kOk;
}
