// layoutfuse command line: synthetic scenes, the g1/align/g2 pipeline, the
// evaluation suite, and the SVG/OBJ renderers.

#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layoutfuse/layoutfuse.hpp"

namespace lf = layoutfuse;
using lf::json;

namespace {

lf::json report_to_json(const lf::PipelineResult& result) {
  json j;
  j["format"] = "layoutfuse-report-v1";
  j["alignment"] = {{"iterations", result.align_report.iterations},
                    {"final_objective", result.align_report.final_objective},
                    {"gradient_norm", result.align_report.gradient_norm},
                    {"converged", result.align_report.converged}};
  json poses = json::array();
  for (std::size_t v = 0; v < result.alignment.image_ids.size(); ++v) {
    json p = lf::io_detail::pose_json(result.alignment.poses[v]);
    p["image_id"] = result.alignment.image_ids[v];
    poses.push_back(p);
  }
  j["poses"] = poses;
  j["scales"] = result.alignment.scales;
  json edges = json::array();
  for (const auto& e : result.view_graph.edges) {
    edges.push_back({{"n", e.n}, {"m", e.m}, {"mean_confidence", e.mean_confidence}});
  }
  json mst = json::array();
  for (auto ei : result.view_graph.mst_edges) {
    mst.push_back(json::array({result.view_graph.edges[ei].n, result.view_graph.edges[ei].m}));
  }
  j["view_graph"] = {{"edges", edges}, {"mst", mst}, {"connected", result.view_graph.connected}};
  return j;
}

json eval_to_json(const lf::EvalReport& report) {
  json j;
  j["format"] = "layoutfuse-eval-v1";
  j["re_iou_pct"] = report.reprojection.iou_pct;
  j["re_pe_pct"] = report.reprojection.pe_pct;
  j["re_ee"] = report.reprojection.ee;
  j["re_rmse"] = report.reprojection.rmse;
  json rra, rta;
  for (const auto& [tau, acc] : report.accuracy) {
    rra[std::to_string(tau)] = acc.rra_pct;
    rta[std::to_string(tau)] = acc.rta_pct;
  }
  j["rra"] = rra;
  j["rta"] = rta;
  j["maa30"] = report.maa;
  j["excluded_pairs"] = report.excluded_pairs;
  j["precision_pct"] = report.pr.precision_pct;
  j["recall_pct"] = report.pr.recall_pct;
  json ladder = json::array();
  for (const auto& entry : report.ladder) {
    ladder.push_back({{"angle_deg", entry.thresholds.angle_deg},
                      {"offset_m", entry.thresholds.offset_m},
                      {"precision_pct", entry.pr.precision_pct},
                      {"recall_pct", entry.pr.recall_pct}});
  }
  j["ladder"] = ladder;
  return j;
}

struct PipelineFlags {
  std::string manifest;
  double epsilon1 = lf::G1Params{}.epsilon1;
  int min_pixels = lf::G1Params{}.min_pixels;
  double proximity = lf::MergeParams{}.proximity_threshold;
  double overlap = lf::MergeParams{}.overlap_threshold;
  double margin = lf::MergeParams{}.margin;
  double snap_tol = lf::MergeParams{}.angle_snap_tol;
  int max_iters = lf::AlignOptions{}.max_iters;
  double lr = lf::AlignOptions{}.lr;
  double tol = lf::AlignOptions{}.tol;

  lf::PipelineOptions options() const {
    lf::PipelineOptions opts;
    opts.g1.epsilon1 = epsilon1;
    opts.g1.min_pixels = min_pixels;
    opts.merge.proximity_threshold = proximity;
    opts.merge.overlap_threshold = overlap;
    opts.merge.margin = margin;
    opts.merge.angle_snap_tol = snap_tol;
    opts.align.max_iters = max_iters;
    opts.align.lr = lr;
    opts.align.tol = tol;
    return opts;
  }
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags* flags) {
  cmd->add_option("--manifest", flags->manifest, "manifest.json path")->required();
  cmd->add_option("--epsilon1", flags->epsilon1, "g1 depth-consistency tolerance");
  cmd->add_option("--min-pixels", flags->min_pixels, "g1 smallest usable mask");
  cmd->add_option("--proximity", flags->proximity, "merge proximity threshold (m)");
  cmd->add_option("--overlap", flags->overlap, "merge overlap fraction");
  cmd->add_option("--margin", flags->margin, "merge corner margin (m)");
  cmd->add_option("--snap-tol", flags->snap_tol, "axis snap tolerance (deg)");
  cmd->add_option("--max-iters", flags->max_iters, "alignment iteration cap");
  cmd->add_option("--lr", flags->lr, "alignment initial step");
  cmd->add_option("--tol", flags->tol, "alignment gradient tolerance");
}

std::vector<lf::ViewBundle> bundles_from_manifest(const std::string& manifest_path) {
  const lf::fs::path path(manifest_path);
  const lf::Manifest manifest =
      lf::manifest_from_json(lf::load_json_file(path), path.string());
  return lf::load_bundles(manifest, path.parent_path());
}

int run_synth(int walls, int cams, std::uint64_t seed, double extent, double height, double noise,
              int size, const std::string& out_dir) {
  lf::SceneSpec spec;
  spec.wall_count = walls;
  spec.camera_count = cams;
  spec.seed = seed;
  spec.room_extent = extent;
  spec.ceiling_height = height;
  spec.noise_sigma = noise;
  spec.image_size = size;
  const lf::Scene scene = lf::generate_room(spec);
  const auto pairs = lf::all_ordered_pairs(static_cast<int>(scene.cameras.size()));
  const auto bundles = lf::emit_view_bundles(scene, pairs, noise);
  const auto manifest = lf::write_scene_directory(scene, bundles, out_dir);
  std::printf("wrote %s (%zu views, %zu pairs)\n", manifest.string().c_str(),
              scene.cameras.size(), bundles.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layoutfuse: multi-view room layout reconstruction"};
  app.require_subcommand(1);

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene directory");
  int walls = 4, cams = 3, size = 96;
  std::uint64_t seed = 1;
  double extent = 6.0, height = 2.8, noise = 0.0;
  std::string out_dir = "scene";
  synth->add_option("--walls", walls, "wall count (even, 4..12)");
  synth->add_option("--cams", cams, "camera count");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--extent", extent, "room extent (m)");
  synth->add_option("--height", height, "ceiling height (m)");
  synth->add_option("--noise", noise, "pointmap noise sigma (m)");
  synth->add_option("--size", size, "render size (px)");
  synth->add_option("--out", out_dir, "output directory");

  // --- layout (g1 only) ---
  auto* layout_cmd = app.add_subcommand("layout", "run per-view g1 and write partial layouts");
  PipelineFlags layout_flags;
  std::string layout_out = "partials.json";
  add_pipeline_flags(layout_cmd, &layout_flags);
  layout_cmd->add_option("--out", layout_out, "output JSON path");

  // --- align ---
  auto* align_cmd = app.add_subcommand("align", "run global alignment and write poses");
  PipelineFlags align_flags;
  std::string align_out = "alignment.json";
  add_pipeline_flags(align_cmd, &align_flags);
  align_cmd->add_option("--out", align_out, "output JSON path");

  // --- merge / pipeline ---
  auto* merge_cmd = app.add_subcommand("merge", "run g1 + alignment + g2 and write the layout");
  PipelineFlags merge_flags;
  std::string merge_layout_out = "layout.json", merge_report_out = "report.json";
  add_pipeline_flags(merge_cmd, &merge_flags);
  merge_cmd->add_option("--layout-out", merge_layout_out, "layout JSON path");
  merge_cmd->add_option("--report-out", merge_report_out, "report JSON path");

  auto* pipeline_cmd = app.add_subcommand("pipeline", "full pipeline plus evaluation when the "
                                                      "manifest references a scene");
  PipelineFlags pipe_flags;
  std::string pipe_layout_out = "layout.json", pipe_report_out = "report.json";
  std::string pipe_eval_out = "eval.json";
  add_pipeline_flags(pipeline_cmd, &pipe_flags);
  pipeline_cmd->add_option("--layout-out", pipe_layout_out, "layout JSON path");
  pipeline_cmd->add_option("--report-out", pipe_report_out, "report JSON path");
  pipeline_cmd->add_option("--eval-out", pipe_eval_out, "evaluation JSON path");

  // --- eval ---
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a layout against a ground-truth scene");
  std::string eval_layout, eval_scene, eval_report, eval_out = "eval.json";
  double thr_angle = 10.0, thr_offset = 0.15;
  eval_cmd->add_option("--layout", eval_layout, "layout.json path")->required();
  eval_cmd->add_option("--scene", eval_scene, "scene.json path")->required();
  eval_cmd->add_option("--report", eval_report, "report.json with predicted poses")->required();
  eval_cmd->add_option("--out", eval_out, "output JSON path");
  eval_cmd->add_option("--angle-thr", thr_angle, "plane match angle threshold (deg)");
  eval_cmd->add_option("--offset-thr", thr_offset, "plane match offset threshold (m)");

  // --- renderers ---
  auto* bird = app.add_subcommand("render-birdview", "SVG birdview of a layout");
  std::string bird_layout, bird_out = "birdview.svg";
  bird->add_option("--layout", bird_layout, "layout.json path")->required();
  bird->add_option("--out", bird_out, "output SVG path");

  auto* wire = app.add_subcommand("render-wireframe", "OBJ wireframe of a layout");
  std::string wire_layout, wire_out = "wireframe.obj";
  wire->add_option("--layout", wire_layout, "layout.json path")->required();
  wire->add_option("--out", wire_out, "output OBJ path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return run_synth(walls, cams, seed, extent, height, noise, size, out_dir);
    }
    if (layout_cmd->parsed()) {
      const auto bundles = bundles_from_manifest(layout_flags.manifest);
      const auto partials = lf::run_g1(bundles, layout_flags.options().g1);
      json j;
      j["format"] = "layoutfuse-partials-v1";
      json views = json::array();
      for (const auto& p : partials) {
        json pj;
        pj["image_id"] = p.image_id;
        json planes = json::array();
        for (const auto& fp : p.planes) {
          planes.push_back({{"mask_id", fp.mask_id},
                            {"pixel_count", fp.pixel_count},
                            {"class", lf::to_string(fp.plane.semantic_class)},
                            {"normal", lf::io_detail::vec3_json(fp.plane.normal)},
                            {"offset", fp.plane.offset},
                            {"fit_rms", fp.fit_rms}});
        }
        pj["planes"] = planes;
        pj["adjacency"] = lf::io_detail::adjacency_json(p.adjacency);
        json skipped = json::array();
        for (const auto& s : p.skipped) {
          skipped.push_back({{"mask_id", s.mask_id}, {"reason", s.reason}});
        }
        pj["skipped"] = skipped;
        views.push_back(pj);
      }
      j["views"] = views;
      lf::save_json_file(layout_out, j);
      std::printf("wrote %s\n", layout_out.c_str());
      return 0;
    }
    if (align_cmd->parsed()) {
      const auto bundles = bundles_from_manifest(align_flags.manifest);
      lf::PipelineResult result;
      result.view_graph = lf::build_view_graph(bundles);
      auto [state, report] = lf::align(bundles, align_flags.options().align);
      result.alignment = std::move(state);
      result.align_report = report;
      lf::save_json_file(align_out, report_to_json(result));
      std::printf("wrote %s (converged=%d, iterations=%d)\n", align_out.c_str(),
                  static_cast<int>(report.converged), report.iterations);
      return 0;
    }
    if (merge_cmd->parsed() || pipeline_cmd->parsed()) {
      const bool full = pipeline_cmd->parsed();
      const PipelineFlags& flags = full ? pipe_flags : merge_flags;
      const auto bundles = bundles_from_manifest(flags.manifest);
      const lf::PipelineResult result = lf::run_pipeline(bundles, flags.options());
      const std::string layout_path = full ? pipe_layout_out : merge_layout_out;
      const std::string report_path = full ? pipe_report_out : merge_report_out;
      lf::save_json_file(layout_path, lf::layout_to_json(result.layout()));
      lf::save_json_file(report_path, report_to_json(result));
      std::printf("wrote %s and %s (%zu planes)\n", layout_path.c_str(), report_path.c_str(),
                  result.layout().planes.size());
      if (full) {
        const lf::fs::path manifest_path(flags.manifest);
        const lf::Manifest manifest =
            lf::manifest_from_json(lf::load_json_file(manifest_path), flags.manifest);
        if (manifest.scene) {
          const lf::fs::path scene_path = manifest.scene->is_absolute()
                                              ? *manifest.scene
                                              : manifest_path.parent_path() / *manifest.scene;
          const lf::Scene scene =
              lf::scene_from_json(lf::load_json_file(scene_path), scene_path.string());
          std::vector<int> ids;
          for (const auto& p : result.partials) ids.push_back(p.image_id);
          const lf::EvalReport report =
              lf::evaluate_against_scene(scene, result.layout(), ids, result.poses_by_view());
          lf::save_json_file(pipe_eval_out, eval_to_json(report));
          std::printf("wrote %s (precision=%.2f%%, recall=%.2f%%)\n", pipe_eval_out.c_str(),
                      report.pr.precision_pct, report.pr.recall_pct);
        }
      }
      return 0;
    }
    if (eval_cmd->parsed()) {
      const lf::Layout layout =
          lf::layout_from_json(lf::load_json_file(eval_layout), eval_layout);
      const lf::Scene scene = lf::scene_from_json(lf::load_json_file(eval_scene), eval_scene);
      const json report_json = lf::load_json_file(eval_report);
      std::vector<int> ids;
      std::vector<lf::PoseSE3> poses;
      for (const auto& p : report_json.at("poses")) {
        ids.push_back(p.at("image_id").get<int>());
        poses.push_back(lf::io_detail::pose_from(p, eval_report));
      }
      const lf::EvalReport report = lf::evaluate_against_scene(
          scene, layout, ids, poses, lf::MatchThresholds{thr_angle, thr_offset});
      lf::save_json_file(eval_out, eval_to_json(report));
      std::printf("wrote %s\n", eval_out.c_str());
      return 0;
    }
    if (bird->parsed()) {
      const lf::Layout layout = lf::layout_from_json(lf::load_json_file(bird_layout), bird_layout);
      lf::atomic_write_file(bird_out, lf::render_birdview(layout));
      std::printf("wrote %s\n", bird_out.c_str());
      return 0;
    }
    if (wire->parsed()) {
      const lf::Layout layout = lf::layout_from_json(lf::load_json_file(wire_layout), wire_layout);
      lf::atomic_write_file(wire_out, lf::render_wireframe(layout));
      std::printf("wrote %s\n", wire_out.c_str());
      return 0;
    }
  } catch (const lf::InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
