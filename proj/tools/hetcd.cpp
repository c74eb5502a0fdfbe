// Command-line front end: every pipeline stage as a subcommand, plus the
// composite `run` and the `toy` walkthrough.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "hetcd/error.hpp"
#include "hetcd/pipeline.hpp"
#include "hetcd/png_io.hpp"
#include "hetcd/synthetic.hpp"
#include "hetcd/theory.hpp"

namespace fs = std::filesystem;
using namespace hetcd;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
}

void save_mask_png(const std::vector<uint8_t>& mask, int h, int w, const std::string& path) {
  Raster r(h, w, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) r.data[i] = mask[i] ? 1.0f : 0.0f;
  save_png_gray(r, 0, path);
}

void write_resolved_next_to(const PipelineConfig& cfg, const std::string& out_path) {
  write_text(out_path + ".resolved", cfg.resolved());
}

struct ConfigCli {
  std::string config_file;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key=value configuration file");
    cmd->add_option("--set", overrides, "inline override, key=value (repeatable)")
        ->take_all();
  }

  PipelineConfig build() const {
    PipelineConfig cfg;
    if (!config_file.empty()) cfg.apply(parse_config_file(config_file));
    cfg.apply(parse_overrides(overrides));
    apply_env_seed(cfg);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hetcd: unsupervised heterogeneous change detection"};
  app.require_subcommand(1);

  // --- synth -------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic two-modality scene");
  std::string synth_preset = "toy";
  uint64_t synth_seed = 0;
  std::string synth_x, synth_y, synth_truth;
  SceneSpec scene_spec;
  synth->add_option("--preset", synth_preset, "toy|scene")->check(CLI::IsMember({"toy", "scene"}));
  synth->add_option("--seed", synth_seed, "structure + noise seed");
  synth->add_option("--out-x", synth_x, "output raster for modality X")->required();
  synth->add_option("--out-y", synth_y, "output raster for modality Y")->required();
  synth->add_option("--out-truth", synth_truth, "output PNG for the ground truth")->required();
  synth->add_option("--height", scene_spec.height);
  synth->add_option("--width", scene_spec.width);
  synth->add_option("--classes", scene_spec.n_classes);
  synth->add_option("--channels-y", scene_spec.channels_y);
  synth->add_option("--change-fraction", scene_spec.change_fraction);

  // --- prior ---------------------------------------------------------------
  auto* prior_cmd = app.add_subcommand("prior", "affinity-based change prior");
  std::string prior_x, prior_y, prior_out, prior_png;
  ConfigCli prior_cfg;
  prior_cmd->add_option("--x", prior_x)->required();
  prior_cmd->add_option("--y", prior_y)->required();
  prior_cmd->add_option("--out", prior_out, "output alpha raster")->required();
  prior_cmd->add_option("--png", prior_png, "optional quicklook PNG");
  int prior_k = -1, prior_stride = -1, prior_threads = -1;
  bool prior_multiscale = false, prior_no_multiscale = false, prior_logx = false, prior_logy = false;
  prior_cmd->add_option("--k", prior_k, "patch size");
  prior_cmd->add_option("--stride", prior_stride);
  prior_cmd->add_flag("--multiscale", prior_multiscale);
  prior_cmd->add_flag("--no-multiscale", prior_no_multiscale);
  prior_cmd->add_flag("--log-x", prior_logx, "log-transform modality X first");
  prior_cmd->add_flag("--log-y", prior_logy);
  prior_cmd->add_option("--threads", prior_threads, "0 = auto");
  prior_cfg.attach(prior_cmd);

  // --- train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a translation network");
  std::string train_arch = "xnet", train_x, train_y, train_alpha, train_out, train_history;
  ConfigCli train_cfg;
  train_cmd->add_option("--arch", train_arch)->check(CLI::IsMember({"xnet", "acenet"}));
  train_cmd->add_option("--x", train_x)->required();
  train_cmd->add_option("--y", train_y)->required();
  train_cmd->add_option("--alpha", train_alpha, "prior raster from `hetcd prior`")->required();
  train_cmd->add_option("--out", train_out, "model checkpoint")->required();
  train_cmd->add_option("--history", train_history, "loss-curve CSV");
  train_cfg.attach(train_cmd);

  // --- detect ----------------------------------------------------------------
  auto* detect_cmd = app.add_subcommand("detect", "difference image and change map");
  std::string det_model, det_x, det_y, det_out_d, det_out_map;
  bool det_no_filter = false;
  ConfigCli det_cfg;
  detect_cmd->add_option("--model", det_model)->required();
  detect_cmd->add_option("--x", det_x)->required();
  detect_cmd->add_option("--y", det_y)->required();
  detect_cmd->add_option("--out-d", det_out_d, "combined difference image")->required();
  detect_cmd->add_option("--out-map", det_out_map, "binary change map PNG")->required();
  detect_cmd->add_flag("--no-filter", det_no_filter, "skip the spatial filter");
  det_cfg.attach(detect_cmd);

  // --- evaluate ---------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "metrics against ground truth");
  std::string eval_d, eval_map, eval_truth, eval_out;
  eval_cmd->add_option("--d", eval_d, "difference image raster")->required();
  eval_cmd->add_option("--map", eval_map, "change-map PNG")->required();
  eval_cmd->add_option("--truth", eval_truth)->required();
  eval_cmd->add_option("--out", eval_out, "report CSV")->required();

  // --- theory-check -------------------------------------------------------
  auto* theory_cmd = app.add_subcommand("theory-check", "conditional vs weighted MSE fixture");
  double th_p_h0 = 0.8;
  uint64_t th_n = 100000, th_seeds = 10;
  std::string th_out;
  theory_cmd->add_option("--p-h0", th_p_h0);
  theory_cmd->add_option("--n", th_n, "samples per seed");
  theory_cmd->add_option("--seeds", th_seeds);
  theory_cmd->add_option("--out", th_out, "report CSV")->required();

  // --- run ----------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "full pipeline: prior, train, detect, evaluate");
  std::string run_x, run_y, run_truth, run_dir = ".";
  ConfigCli run_cfg;
  run_cmd->add_option("--x", run_x)->required();
  run_cmd->add_option("--y", run_y)->required();
  run_cmd->add_option("--truth", run_truth, "optional ground truth; enables evaluation");
  run_cmd->add_option("--out-dir", run_dir)->required();
  run_cfg.attach(run_cmd);

  // --- toy ----------------------------------------------------------------
  auto* toy_cmd = app.add_subcommand("toy", "8x8 two-modality walkthrough of the prior");
  std::string toy_dir = ".";
  uint64_t toy_seed = 0;
  toy_cmd->add_option("--out-dir", toy_dir);
  toy_cmd->add_option("--seed", toy_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      SyntheticScene scene;
      if (synth_preset == "toy") {
        scene = make_toy(synth_seed);
      } else {
        scene_spec.seed = synth_seed;
        scene_spec.noise_seed = synth_seed + 1;
        scene = make_scene(scene_spec);
      }
      save_raster(scene.x, synth_x);
      save_raster(scene.y, synth_y);
      save_mask_png(scene.truth, scene.x.height, scene.x.width, synth_truth);
      std::printf("synth: %dx%d scene written\n", scene.x.height, scene.x.width);
    } else if (*prior_cmd) {
      PipelineConfig cfg = prior_cfg.build();
      if (prior_k > 0) cfg.affinity.patch_size = prior_k;
      if (prior_stride > 0) cfg.affinity.stride = prior_stride;
      if (prior_multiscale) cfg.affinity.multiscale = true;
      if (prior_no_multiscale) cfg.affinity.multiscale = false;
      if (prior_logx) cfg.log_x = true;
      if (prior_logy) cfg.log_y = true;
      if (prior_threads >= 0) {
        cfg.threads = prior_threads;
        cfg.affinity.threads = prior_threads;
      }
      const Raster x = load_raster(prior_x);
      const Raster y = load_raster(prior_y);
      const PriorStage stage = stage_prior(x, y, cfg);
      save_raster(stage.prior.to_raster(), prior_out);
      if (!prior_png.empty()) save_png_gray(stage.prior.to_raster(), 0, prior_png);
      write_resolved_next_to(cfg, prior_out);
      std::printf("prior: |P| = %llu anchors at full resolution\n",
                  static_cast<unsigned long long>(patch_count(x.height, x.width,
                                                              cfg.affinity.patch_size,
                                                              cfg.affinity.stride)));
    } else if (*train_cmd) {
      PipelineConfig cfg = train_cfg.build();
      cfg.arch = train_arch;
      const Raster x = load_raster(train_x);
      const Raster y = load_raster(train_y);
      const Raster alpha = load_raster(train_alpha);
      if (alpha.height != x.height || alpha.width != x.width || alpha.channels != 1) {
        throw ShapeError("train: alpha raster must be single-channel and aligned");
      }
      PriorMap prior;
      prior.height = alpha.height;
      prior.width = alpha.width;
      prior.alpha.assign(alpha.data.begin(), alpha.data.end());
      prior.counts.assign(prior.alpha.size(), 1);

      NormalizedRaster xn = normalize(cfg.log_x ? log_intensity(x) : x);
      NormalizedRaster yn = normalize(cfg.log_y ? log_intensity(y) : y);
      const AblationVariant variant = ablation_from_string(cfg.variant);
      TrainHistory history;
      if (cfg.arch == "xnet") {
        XNetResult r = train_xnet(xn.raster, yn.raster, prior, cfg.train, cfg.weights, variant);
        save_xnet(r.model, train_out);
        history = std::move(r.history);
      } else {
        ACENetResult r = train_acenet(xn.raster, yn.raster, prior, cfg.train, cfg.weights, variant);
        save_acenet(r.model, train_out);
        history = std::move(r.history);
      }
      if (!train_history.empty()) write_text(train_history, history_csv(history));
      write_resolved_next_to(cfg, train_out);
      std::printf("train: %s finished after %d epochs, final total loss %.6g\n", cfg.arch.c_str(),
                  cfg.train.epochs, history.empty() ? 0.0 : history.back().total);
    } else if (*detect_cmd) {
      PipelineConfig cfg = det_cfg.build();
      if (det_no_filter) cfg.filter.enabled = false;
      const Raster x = load_raster(det_x);
      const Raster y = load_raster(det_y);
      NormalizedRaster xn = normalize(cfg.log_x ? log_intensity(x) : x);
      NormalizedRaster yn = normalize(cfg.log_y ? log_intensity(y) : y);
      DetectionResult det;
      if (peek_model_kind(det_model) == ModelKind::xnet) {
        det = stage_detect_xnet(load_xnet(det_model), xn.raster, yn.raster, cfg.filter);
      } else {
        det = stage_detect_acenet(load_acenet(det_model), xn.raster, yn.raster, cfg.filter);
      }
      save_raster(det.combined.to_raster(), det_out_d);
      save_mask_png(det.map.mask, det.map.height, det.map.width, det_out_map);
      write_resolved_next_to(cfg, det_out_d);
      std::printf("detect: threshold %.6f, %zu pixels flagged\n", det.map.threshold,
                  static_cast<std::size_t>(
                      std::count(det.map.mask.begin(), det.map.mask.end(), uint8_t(1))));
    } else if (*eval_cmd) {
      const Raster d_raster = load_raster(eval_d);
      DifferenceImage d;
      d.height = d_raster.height;
      d.width = d_raster.width;
      d.values = d_raster.data;
      const std::vector<uint8_t> truth = load_truth(eval_truth, d.height, d.width);
      const Raster map_raster = load_raster(eval_map);
      if (map_raster.height != d.height || map_raster.width != d.width) {
        throw ShapeError("evaluate: map size does not match the difference image");
      }
      ChangeMap map;
      map.height = d.height;
      map.width = d.width;
      map.mask.resize(d.values.size());
      for (std::size_t i = 0; i < map.mask.size(); ++i) map.mask[i] = map_raster.data[i] > 0.5f;
      const MetricsReport report = stage_evaluate(d, map, truth);
      write_text(eval_out, metrics_csv(report));
      std::printf("evaluate: auc=%.4f oa=%.4f f1=%.4f kappa=%.4f\n", report.auc, report.oa,
                  report.f1, report.kappa);
    } else if (*theory_cmd) {
      TwoHypothesisModel model;
      model.p_h0 = th_p_h0;
      std::vector<EquivalenceReport> reports;
      double mean_rel = 0.0;
      for (uint64_t s = 0; s < th_seeds; ++s) {
        reports.push_back(verify_equivalence(model, th_n, s));
        mean_rel += reports.back().rel_difference;
      }
      write_text(th_out, equivalence_csv(reports));
      std::printf("theory-check: mean relative difference %.4f%% over %llu seeds\n",
                  100.0 * mean_rel / th_seeds, static_cast<unsigned long long>(th_seeds));
    } else if (*run_cmd) {
      PipelineConfig cfg = run_cfg.build();
      std::optional<std::string> truth;
      if (!run_truth.empty()) truth = run_truth;
      const auto report = run_pipeline(run_x, run_y, truth, run_dir, cfg);
      if (report) {
        std::printf("run: auc=%.4f oa=%.4f f1=%.4f kappa=%.4f\n", report->auc, report->oa,
                    report->f1, report->kappa);
      } else {
        std::printf("run: completed (no ground truth, evaluation skipped)\n");
      }
    } else if (*toy_cmd) {
      fs::create_directories(toy_dir);
      const auto out = [&](const char* name) { return (fs::path(toy_dir) / name).string(); };
      const SyntheticScene scene = make_toy(toy_seed);
      save_raster(scene.x, out("x.hcdr"));
      save_raster(scene.y, out("y.hcdr"));
      save_mask_png(scene.truth, scene.x.height, scene.x.width, out("truth.png"));

      // Single 8x8 window over the whole pattern, stride equal to the patch.
      PipelineConfig cfg;
      cfg.affinity.patch_size = 8;
      cfg.affinity.stride = 8;
      cfg.affinity.multiscale = false;
      cfg.log_x = true;  // modality X carries multiplicative noise
      const PriorStage stage = stage_prior(scene.x, scene.y, cfg);
      save_raster(stage.prior.to_raster(), out("alpha.hcdr"));
      save_png_gray(stage.prior.to_raster(), 0, out("alpha.png"));

      DifferenceImage alpha_image;
      alpha_image.height = stage.prior.height;
      alpha_image.width = stage.prior.width;
      alpha_image.values.assign(stage.prior.alpha.begin(), stage.prior.alpha.end());
      const ChangeMap map = threshold_map(alpha_image, otsu_threshold(alpha_image));
      save_mask_png(map.mask, map.height, map.width, out("map.png"));
      save_png_rgb(confusion_map(map, scene.truth), {0, 1, 2}, out("confusion.png"));

      const MetricsReport report = binary_metrics(map.mask, scene.truth);
      write_text(out("report.csv"), metrics_csv(report));
      std::printf("toy: accuracy %.1f%% (%llu/%llu pixels correct)\n", 100.0 * report.oa,
                  static_cast<unsigned long long>(report.confusion.tp + report.confusion.tn),
                  static_cast<unsigned long long>(report.confusion.total()));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
