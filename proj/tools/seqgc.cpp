// seqgc: command-line front end for plane and homography fitting.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqgc/bundle.hpp"
#include "seqgc/config.hpp"
#include "seqgc/io.hpp"
#include "seqgc/pipeline.hpp"
#include "seqgc/report.hpp"
#include "seqgc/scene.hpp"
#include "seqgc/seqfit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seqgc;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;

FitConfig config_or_default(const std::string& path) {
  return path.empty() ? FitConfig{} : load_config(path);
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

ImageSize parse_image_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const int w = std::stoi(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    const std::string rest = text.substr(x + 1);
    const int h = std::stoi(rest, &used);
    if (used != rest.size() || w <= 0 || h <= 0) throw std::invalid_argument(text);
    return ImageSize{static_cast<double>(w), static_cast<double>(h)};
  } catch (const std::logic_error&) {
    throw UsageError("--image-size expects WxH with positive integers, got '" + text + "'");
  }
}

struct SynthArgs {
  std::string spec, out, format = "csv";
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a) {
  const PointFormat format = point_format(a.format);
  std::ifstream in(a.spec);
  if (!in) throw DataError("cannot open " + a.spec);
  SceneSpec spec;
  try {
    spec = parse_scene_spec(in);
  } catch (const std::invalid_argument& e) {
    throw DataError(a.spec + ": " + e.what());
  }
  if (a.seed) spec.seed = *a.seed;
  const Scene scene = synth_scene(spec);

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  {
    std::ofstream points(dir / (format == PointFormat::csv ? "points.csv" : "points.ply"));
    if (format == PointFormat::csv) {
      write_points_csv(points, scene.points);
    } else {
      write_points_ply(points, scene.points);
    }
    std::ofstream mask(dir / "mask.csv");
    write_mask_csv(mask, scene.points);
    if (!points || !mask) throw DataError("cannot write into " + a.out);
  }
  write_json((dir / "truth.json").string(), to_json(scene.truth));
}

struct FitPlanesArgs {
  std::string points, mask, format, config, mode = "gc", out = "-", scale = "none";
  std::uint64_t seed = 0;
  bool timings = false;
};

void run_fit_planes(const FitPlanesArgs& a) {
  const auto mode = parse_mode(a.mode);
  if (!mode) throw UsageError("unknown --mode '" + a.mode + "' (expected gc, seq or lsq)");
  if (a.scale != "none" && a.scale != "rgbd") throw UsageError("--scale expects none or rgbd");
  auto points = load_points(a.points, a.format);
  if (!a.mask.empty()) apply_mask(points, load_mask(a.mask));
  compact_labels(points);
  FitConfig cfg = config_or_default(a.config);
  if (a.scale == "rgbd") cfg = scale_thresholds_rgbd(cfg, points);

  const auto prior = prior_from_points(points);
  const auto result = run_pipeline(points, prior, cfg, *mode, a.seed);
  json out = to_json(result, points, a.timings);
  out["mode"] = to_string(*mode);
  out["seed"] = a.seed;
  out["point_count"] = points.size();
  write_json(a.out, out);
}

struct FitHomographiesArgs {
  std::string matches, image_size, config, out = "-";
  std::uint64_t seed = 0;
};

void run_fit_homographies(const FitHomographiesArgs& a) {
  const ImageSize image = parse_image_size(a.image_size);
  auto matches = load_matches(a.matches);
  compact_labels(matches);
  const FitConfig cfg = config_or_default(a.config);
  const auto prior = prior_from_points(matches);
  const auto proposals = propose_models(prior, ModelFamily::homography);
  const auto fits = fit_sequential(proposals, matches, image, cfg, a.seed);
  json out = to_json(fits, matches);
  out["seed"] = a.seed;
  out["match_count"] = matches.size();
  if (proposals.empty()) out["notes"] = {"no proposals"};
  write_json(a.out, out);
}

struct RefineArgs {
  std::string bundle, config, out, report;
  bool decoupled = false;
};

void run_refine(const RefineArgs& a) {
  const Bundle input = load_bundle(a.bundle);
  const auto options = refine_options_from(config_or_default(a.config));
  RefineReport report;
  const Bundle refined =
      a.decoupled ? decoupled_refine(input, options, &report) : joint_refine(input, options, &report);
  if (a.out == "-") {
    write_bundle(std::cout, refined);
  } else {
    save_bundle(a.out, refined);
  }
  if (!a.report.empty()) write_json(a.report, to_json(report));
}

struct EvalArgs {
  std::string result, truth, out = "-", table;
};

void run_eval(const EvalArgs& a) {
  const json result = read_json(a.result);
  const json truth_json = read_json(a.truth);
  std::vector<PlaneModel> models;
  GroundTruth truth;
  try {
    models = models_from_json(result);
    truth = truth_from_json(truth_json);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed result or truth: ") + e.what());
  }
  EvalReport report;
  try {
    report = evaluate(models, truth.planes, truth.point_plane);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  if (result.contains("timings")) {
    for (const auto& t : result["timings"]) {
      report.timings.push_back({t.at("stage").get<std::string>(), t.at("ms").get<double>()});
    }
  }
  write_json(a.out, to_json(report, result.contains("timings")));
  if (!a.table.empty()) {
    std::ofstream table(a.table);
    if (!table) throw DataError("cannot write " + a.table);
    write_eval_table(table, report);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential graph-cut RANSAC for planes and homographies"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic plane scene");
  synth_cmd->add_option("--spec", synth.spec, "Scene spec (key = value)")->required();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--format", synth.format, "Point file format: csv or ply");
  synth_cmd->add_option("--seed", synth.seed, "Override the spec's seed");

  FitPlanesArgs planes;
  auto* planes_cmd = app.add_subcommand("fit-planes", "Fit planes to a labeled point cloud");
  planes_cmd->add_option("--points", planes.points, "Points (csv or ply)")->required();
  planes_cmd->add_option("--mask", planes.mask, "Per-point labels, id,label");
  planes_cmd->add_option("--format", planes.format, "Point format; default from the extension");
  planes_cmd->add_option("--config", planes.config, "Fit configuration");
  planes_cmd->add_option("--mode", planes.mode, "gc, seq or lsq");
  planes_cmd->add_option("--seed", planes.seed, "Random seed");
  planes_cmd->add_option("--scale", planes.scale, "Threshold scaling: none or rgbd");
  planes_cmd->add_option("--out", planes.out, "Result JSON ('-' for stdout)");
  planes_cmd->add_flag("--timings", planes.timings, "Include stage timings (not reproducible)");

  FitHomographiesArgs homs;
  auto* homs_cmd = app.add_subcommand("fit-homographies", "Fit homographies to labeled matches");
  homs_cmd->add_option("--matches", homs.matches, "Matches, id,xr,yr,xc,yc[,label]")->required();
  homs_cmd->add_option("--image-size", homs.image_size, "Reference image size WxH")->required();
  homs_cmd->add_option("--config", homs.config, "Fit configuration");
  homs_cmd->add_option("--seed", homs.seed, "Random seed");
  homs_cmd->add_option("--out", homs.out, "Result JSON ('-' for stdout)");

  RefineArgs refine;
  auto* refine_cmd = app.add_subcommand("refine-map", "Jointly refine cameras, points and planes");
  refine_cmd->add_option("--bundle", refine.bundle, "Input bundle")->required();
  refine_cmd->add_option("--config", refine.config, "Fit configuration");
  refine_cmd->add_option("--out", refine.out, "Refined bundle ('-' for stdout)")->required();
  refine_cmd->add_option("--report", refine.report, "Refinement report JSON");
  refine_cmd->add_flag("--decoupled", refine.decoupled, "Refine structure before the joint pass");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a fit-planes result against ground truth");
  eval_cmd->add_option("--result", eval.result, "fit-planes JSON")->required();
  eval_cmd->add_option("--truth", eval.truth, "truth.json from synth")->required();
  eval_cmd->add_option("--out", eval.out, "Report JSON ('-' for stdout)");
  eval_cmd->add_option("--table", eval.table, "Optional gnuplot table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*synth_cmd) run_synth(synth);
    if (*planes_cmd) run_fit_planes(planes);
    if (*homs_cmd) run_fit_homographies(homs);
    if (*refine_cmd) run_refine(refine);
    if (*eval_cmd) run_eval(eval);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return 0;
}
