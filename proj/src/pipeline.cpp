#include "hetcd/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hetcd/error.hpp"
#include "hetcd/png_io.hpp"
#include "hetcd/synthetic.hpp"

namespace hetcd {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

// Writes bytes to <path>.partial and renames into place on commit().
class StagedFile {
 public:
  explicit StagedFile(std::string path) : path_(std::move(path)), partial_(path_ + ".partial") {}

  void write(const std::string& bytes) {
    std::ofstream out(partial_, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(partial_ + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(partial_ + ": write failed");
  }

  template <typename Fn>
  void write_with(Fn&& writer) {
    writer(partial_);
  }

  void commit() { fs::rename(partial_, path_); }

 private:
  std::string path_;
  std::string partial_;
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Raster normalized_input(const Raster& r, bool log_transform, NormalizedRaster& out) {
  out = normalize(log_transform ? log_intensity(r) : r);
  return out.raster;
}

DetectionResult detect_from_translation(const Raster& x_norm, const Raster& y_norm,
                                        const Translation& t, const SpatialFilterConfig& filter) {
  DetectionResult r;
  const DifferenceImage dx = distance_image(x_norm, t.x_hat);
  const DifferenceImage dy = distance_image(y_norm, t.y_hat);
  r.combined = combine(dx, dy);
  r.filtered = spatial_filter(r.combined, filter);
  r.map = threshold_map(r.filtered, otsu_threshold(r.filtered));
  return r;
}

}  // namespace

void PipelineConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "k") affinity.patch_size = std::stoi(value);
    else if (key == "stride") affinity.stride = std::stoi(value);
    else if (key == "knn_fraction") affinity.knn_fraction = std::stod(value);
    else if (key == "multiscale") affinity.multiscale = parse_bool(value, key);
    else if (key == "epochs") train.epochs = std::stoi(value);
    else if (key == "batches_per_epoch") train.batches_per_epoch = std::stoi(value);
    else if (key == "batch_size") train.batch_size = std::stoi(value);
    else if (key == "patch_hw") train.patch_hw = std::stoi(value);
    else if (key == "lr") train.lr = std::stod(value);
    else if (key == "milestones") train.milestones = parse_int_list(value);
    else if (key == "seed") train.seed = std::stoull(value);
    else if (key == "augmentation") train.augmentation = parse_bool(value, key);
    else if (key == "dropout_rate") train.dropout_rate = std::stod(value);
    else if (key == "w_adv") weights.w_adv = std::stod(value);
    else if (key == "w_ae") weights.w_ae = std::stod(value);
    else if (key == "w_cyc") weights.w_cyc = std::stod(value);
    else if (key == "w_alpha") weights.w_alpha = std::stod(value);
    else if (key == "w_theta") weights.w_theta = std::stod(value);
    else if (key == "arch") arch = value;
    else if (key == "variant") variant = value;
    else if (key == "filter_enabled") filter.enabled = parse_bool(value, key);
    else if (key == "filter_iterations") filter.iterations = std::stoi(value);
    else if (key == "filter_kernel_width") filter.kernel_width = std::stod(value);
    else if (key == "filter_radius") filter.radius = std::stoi(value);
    else if (key == "filter_sigma_spatial") filter.sigma_spatial = std::stod(value);
    else if (key == "log_x") log_x = parse_bool(value, key);
    else if (key == "log_y") log_y = parse_bool(value, key);
    else if (key == "threads") threads = std::stoi(value);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  if (arch != "xnet" && arch != "acenet") throw ConfigError("config: arch must be xnet or acenet");
  ablation_from_string(variant);  // validates
  affinity.threads = threads;
  train.threads = threads;
}

std::string PipelineConfig::resolved() const {
  std::string milestones_str;
  for (std::size_t i = 0; i < train.milestones.size(); ++i) {
    if (i) milestones_str += ",";
    milestones_str += std::to_string(train.milestones[i]);
  }
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "arch=%s\nvariant=%s\nk=%d\nstride=%d\nknn_fraction=%.9g\nmultiscale=%d\n"
                "epochs=%d\nbatches_per_epoch=%d\nbatch_size=%d\npatch_hw=%d\nlr=%.9g\n"
                "milestones=%s\nseed=%llu\naugmentation=%d\ndropout_rate=%.9g\n"
                "w_adv=%.9g\nw_ae=%.9g\nw_cyc=%.9g\nw_alpha=%.9g\nw_theta=%.9g\n"
                "filter_enabled=%d\nfilter_iterations=%d\nfilter_kernel_width=%.9g\n"
                "filter_radius=%d\nfilter_sigma_spatial=%.9g\nlog_x=%d\nlog_y=%d\nthreads=%d\n",
                arch.c_str(), variant.c_str(), affinity.patch_size, affinity.stride,
                affinity.knn_fraction, affinity.multiscale ? 1 : 0, train.epochs,
                train.batches_per_epoch, train.batch_size, train.patch_hw, train.lr,
                milestones_str.c_str(), static_cast<unsigned long long>(train.seed),
                train.augmentation ? 1 : 0, train.dropout_rate, weights.w_adv, weights.w_ae,
                weights.w_cyc, weights.w_alpha, weights.w_theta, filter.enabled ? 1 : 0,
                filter.iterations, filter.kernel_width, filter.radius, filter.sigma_spatial,
                log_x ? 1 : 0, log_y ? 1 : 0, threads);
  return buf;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open config file");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& kv_args) {
  std::map<std::string, std::string> kv;
  for (const std::string& arg : kv_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + arg + "': expected key=value");
    kv[trim(arg.substr(0, eq))] = trim(arg.substr(eq + 1));
  }
  return kv;
}

bool apply_env_seed(PipelineConfig& cfg) {
  const char* env = std::getenv("HETCD_SEED");
  if (!env || !*env) return false;
  cfg.train.seed = std::stoull(env);
  return true;
}

PriorStage stage_prior(const Raster& x, const Raster& y, const PipelineConfig& cfg) {
  PriorStage s;
  const Raster xn = normalized_input(x, cfg.log_x, s.x);
  const Raster yn = normalized_input(y, cfg.log_y, s.y);
  s.prior = cfg.affinity.multiscale ? compute_prior_multiscale(s.x, s.y, cfg.affinity)
                                    : compute_prior(s.x, s.y, cfg.affinity);
  (void)xn;
  (void)yn;
  return s;
}

DetectionResult stage_detect_xnet(const XNetModel& model, const Raster& x_norm,
                                  const Raster& y_norm, const SpatialFilterConfig& filter) {
  return detect_from_translation(x_norm, y_norm, translate(model, x_norm, y_norm), filter);
}

DetectionResult stage_detect_acenet(const ACENetModel& model, const Raster& x_norm,
                                    const Raster& y_norm, const SpatialFilterConfig& filter) {
  return detect_from_translation(x_norm, y_norm, translate(model, x_norm, y_norm), filter);
}

MetricsReport stage_evaluate(const DifferenceImage& combined, const ChangeMap& map,
                             const std::vector<uint8_t>& truth) {
  MetricsReport report = binary_metrics(map.mask, truth);
  report.auc = roc_auc(combined.values, truth);
  return report;
}

std::vector<uint8_t> load_truth(const std::string& path, int expected_h, int expected_w) {
  const Raster r = load_raster(path);
  if (r.height != expected_h || r.width != expected_w) {
    throw ShapeError(path + ": ground truth size does not match the images");
  }
  std::vector<uint8_t> truth(r.band_size());
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = r.data[i] > 0.5f;
  return truth;
}

std::optional<MetricsReport> run_pipeline(const std::string& x_path, const std::string& y_path,
                                          const std::optional<std::string>& truth_path,
                                          const std::string& out_dir, PipelineConfig cfg) {
  fs::create_directories(out_dir);
  const auto out = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  auto stage = [](const std::string& name, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      throw Error("stage '" + name + "' failed: " + e.what());
    }
  };

  // Resolved configuration first, so even a failed run is reproducible.
  {
    StagedFile f(out("config.resolved"));
    f.write(cfg.resolved());
    f.commit();
  }

  Raster x = stage("load", [&] { return load_raster(x_path); });
  Raster y = stage("load", [&] { return load_raster(y_path); });
  std::optional<std::vector<uint8_t>> truth;
  if (truth_path) {
    truth = stage("load", [&] { return load_truth(*truth_path, x.height, x.width); });
  }

  PriorStage prior = stage("prior", [&] { return stage_prior(x, y, cfg); });
  {
    StagedFile alpha_file(out("alpha.hcdr"));
    alpha_file.write_with([&](const std::string& p) { save_raster(prior.prior.to_raster(), p); });
    StagedFile alpha_png(out("alpha.png"));
    alpha_png.write_with([&](const std::string& p) { save_png_gray(prior.prior.to_raster(), 0, p); });
    alpha_file.commit();
    alpha_png.commit();
  }

  DetectionResult det;
  TrainHistory history;
  if (cfg.arch == "xnet") {
    XNetResult r = stage("train", [&] {
      return train_xnet(prior.x.raster, prior.y.raster, prior.prior, cfg.train, cfg.weights,
                        ablation_from_string(cfg.variant));
    });
    history = std::move(r.history);
    {
      StagedFile model_file(out("model.hcdm"));
      model_file.write_with([&](const std::string& p) { save_xnet(r.model, p); });
      StagedFile hist_file(out("history.csv"));
      hist_file.write(history_csv(history));
      model_file.commit();
      hist_file.commit();
    }
    det = stage("detect", [&] {
      return stage_detect_xnet(r.model, prior.x.raster, prior.y.raster, cfg.filter);
    });
  } else {
    ACENetResult r = stage("train", [&] {
      return train_acenet(prior.x.raster, prior.y.raster, prior.prior, cfg.train, cfg.weights,
                          ablation_from_string(cfg.variant));
    });
    history = std::move(r.history);
    {
      StagedFile model_file(out("model.hcdm"));
      model_file.write_with([&](const std::string& p) { save_acenet(r.model, p); });
      StagedFile hist_file(out("history.csv"));
      hist_file.write(history_csv(history));
      model_file.commit();
      hist_file.commit();
    }
    det = stage("detect", [&] {
      return stage_detect_acenet(r.model, prior.x.raster, prior.y.raster, cfg.filter);
    });
  }

  {
    StagedFile d_file(out("d.hcdr"));
    d_file.write_with([&](const std::string& p) { save_raster(det.combined.to_raster(), p); });
    StagedFile map_png(out("map.png"));
    map_png.write_with([&](const std::string& p) {
      Raster mask(det.map.height, det.map.width, 1);
      for (std::size_t i = 0; i < det.map.mask.size(); ++i) mask.data[i] = det.map.mask[i] ? 1.0f : 0.0f;
      save_png_gray(mask, 0, p);
    });
    d_file.commit();
    map_png.commit();
  }

  if (!truth) return std::nullopt;

  MetricsReport report = stage("evaluate", [&] { return stage_evaluate(det.combined, det.map, *truth); });
  {
    StagedFile report_file(out("report.csv"));
    report_file.write(metrics_csv(report));
    StagedFile confusion_png(out("confusion.png"));
    confusion_png.write_with([&](const std::string& p) {
      save_png_rgb(confusion_map(det.map, *truth), {0, 1, 2}, p);
    });
    report_file.commit();
    confusion_png.commit();
  }
  return report;
}

AblationOutcome ablation_run(const std::string& arch, AblationVariant variant, const Raster& x,
                             const Raster& y, const std::vector<uint8_t>& truth,
                             const PipelineConfig& cfg) {
  NormalizedRaster xn, yn;
  const Raster xr = normalized_input(x, cfg.log_x, xn);
  const Raster yr = normalized_input(y, cfg.log_y, yn);
  (void)xr;
  (void)yr;

  PriorMap prior;
  if (variant == AblationVariant::no_alpha) {
    // The trainer replaces the prior with uniform noise; a placeholder map
    // keeps shapes aligned.
    prior.height = x.height;
    prior.width = x.width;
    prior.alpha.assign(static_cast<std::size_t>(x.height) * x.width, 0.0f);
    prior.counts.assign(prior.alpha.size(), 1);
  } else {
    prior = cfg.affinity.multiscale ? compute_prior_multiscale(xn, yn, cfg.affinity)
                                    : compute_prior(xn, yn, cfg.affinity);
  }

  AblationOutcome outcome;
  DetectionResult det;
  if (arch == "xnet") {
    XNetResult r = train_xnet(xn.raster, yn.raster, prior, cfg.train, cfg.weights, variant);
    outcome.history = std::move(r.history);
    det = stage_detect_xnet(r.model, xn.raster, yn.raster, cfg.filter);
  } else if (arch == "acenet") {
    ACENetResult r = train_acenet(xn.raster, yn.raster, prior, cfg.train, cfg.weights, variant);
    outcome.history = std::move(r.history);
    det = stage_detect_acenet(r.model, xn.raster, yn.raster, cfg.filter);
  } else {
    throw ConfigError("ablation_run: arch must be xnet or acenet");
  }
  outcome.metrics = stage_evaluate(det.combined, det.map, truth);
  return outcome;
}

}  // namespace hetcd
