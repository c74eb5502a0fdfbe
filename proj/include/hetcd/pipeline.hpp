#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetcd/affinity.hpp"
#include "hetcd/change_extraction.hpp"
#include "hetcd/metrics.hpp"
#include "hetcd/translators.hpp"

namespace hetcd {

// Flat key=value configuration covering every stage. Precedence is
// built-in defaults < config file < command-line overrides; HETCD_SEED in
// the environment takes priority over all of them. Unknown keys are
// rejected so typos fail loudly.
struct PipelineConfig {
  AffinityConfig affinity;
  TrainConfig train;
  LossWeights weights;
  SpatialFilterConfig filter;
  std::string arch = "xnet";
  std::string variant = "proposed";
  bool log_x = false;  // natural-log transform (SAR-like inputs) before normalization
  bool log_y = false;
  int threads = 0;

  void apply(const std::map<std::string, std::string>& kv);
  std::string resolved() const;  // canonical snapshot, one key=value per line
};

std::map<std::string, std::string> parse_config_file(const std::string& path);
std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& kv_args);

// Environment seed override; returns true if HETCD_SEED was set.
bool apply_env_seed(PipelineConfig& cfg);

// Stage results shared between the composite run and the subcommands.
struct DetectionResult {
  DifferenceImage combined;  // before filtering; AUC is evaluated on this
  DifferenceImage filtered;
  ChangeMap map;
};

struct PriorStage {
  PriorMap prior;
  NormalizedRaster x;
  NormalizedRaster y;
};

PriorStage stage_prior(const Raster& x, const Raster& y, const PipelineConfig& cfg);

DetectionResult stage_detect_xnet(const XNetModel& model, const Raster& x_norm,
                                  const Raster& y_norm, const SpatialFilterConfig& filter);
DetectionResult stage_detect_acenet(const ACENetModel& model, const Raster& x_norm,
                                    const Raster& y_norm, const SpatialFilterConfig& filter);

MetricsReport stage_evaluate(const DifferenceImage& combined, const ChangeMap& map,
                             const std::vector<uint8_t>& truth);

// Ground truth from an 8-bit PNG or a native raster: a pixel is "changed"
// when its first channel exceeds one half.
std::vector<uint8_t> load_truth(const std::string& path, int expected_h, int expected_w);

// End-to-end pipeline: prior, training, detection and (with truth)
// evaluation. Every artifact is first written with a ".partial" suffix and
// renamed on stage completion, so an aborted run leaves its debris visible.
// Returns the metrics report when truth was provided.
std::optional<MetricsReport> run_pipeline(const std::string& x_path, const std::string& y_path,
                                          const std::optional<std::string>& truth_path,
                                          const std::string& out_dir, PipelineConfig cfg);

// Trains one ablation arm on a synthetic scene and reports the AUC of the
// resulting difference image. Used by the ablation study harness.
struct AblationOutcome {
  TrainHistory history;
  MetricsReport metrics;
};
AblationOutcome ablation_run(const std::string& arch, AblationVariant variant, const Raster& x,
                             const Raster& y, const std::vector<uint8_t>& truth,
                             const PipelineConfig& cfg);

}  // namespace hetcd
