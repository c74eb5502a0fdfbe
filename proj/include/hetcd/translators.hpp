#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetcd/affinity.hpp"
#include "hetcd/losses.hpp"
#include "hetcd/nn/network.hpp"
#include "hetcd/raster.hpp"

namespace hetcd {

// Two fully convolutional translators: f maps X-domain data to the Y domain
// and g the reverse. Hidden layers are 100/50/20 filters with leaky ReLU,
// the output layer matches the target channel count and uses tanh.
struct XNetModel {
  nn::ConvNet<float> f;
  nn::ConvNet<float> g;
  int channels_x = 0;
  int channels_y = 0;

  std::size_t parameter_count() const { return f.parameter_count() + g.parameter_count(); }
};

// Autoencoder pair with a shared 20-channel code space aligned by a code
// discriminator. Encoders are 100/50/20 (code layer tanh); decoders mirror
// them with 20/50/100 plus the channel-matching tanh output; the
// discriminator is 64/32/16 filters with a pooled single-neuron head.
struct ACENetModel {
  nn::ConvNet<float> enc_x;
  nn::ConvNet<float> enc_y;
  nn::ConvNet<float> dec_x;
  nn::ConvNet<float> dec_y;
  nn::Discriminator<float> discr;
  int channels_x = 0;
  int channels_y = 0;

  std::size_t parameter_count() const {
    return enc_x.parameter_count() + enc_y.parameter_count() + dec_x.parameter_count() +
           dec_y.parameter_count() + discr.parameter_count();
  }
  std::size_t autoencoder_parameter_count() const {
    return enc_x.parameter_count() + enc_y.parameter_count() + dec_x.parameter_count() +
           dec_y.parameter_count();
  }
};

XNetModel make_xnet(int channels_x, int channels_y, uint64_t init_seed);
ACENetModel make_acenet(int channels_x, int channels_y, uint64_t init_seed);

struct TrainConfig {
  int epochs = 240;
  int batches_per_epoch = 10;
  int batch_size = 10;
  int patch_hw = 100;  // clamped to min(H, W) for small scenes
  double lr = 1e-5;
  std::vector<int> milestones = {80, 160};
  uint64_t seed = 0;
  bool augmentation = true;
  double dropout_rate = 0.2;
  int threads = 0;
};

enum class AblationVariant {
  proposed,
  no_alpha,       // random uniform prior instead of the affinity prior
  no_cycle,       // w_cyc = 0
  no_milestones,  // keep the initial prior for the whole run
  discr_output,   // add least-squares discriminators on the translated images
  no_discr,       // ACE only: drop the code discriminator
  no_recon,       // ACE only: w_ae = 0
};

AblationVariant ablation_from_string(const std::string& name);
std::string to_string(AblationVariant v);

struct EpochStats {
  int epoch = 0;
  LossTerms terms;
  double total = 0.0;
};
using TrainHistory = std::vector<EpochStats>;

// CSV: epoch, every loss term, total.
std::string history_csv(const TrainHistory& history);

struct XNetResult {
  XNetModel model;
  TrainHistory history;
};
struct ACENetResult {
  ACENetModel model;
  TrainHistory history;
};

// Inputs must be spatially aligned and normalized to [-1, 1]. The prior
// enters the loss as the pixel weight 1 - alpha and is refreshed from the
// model's own difference image at each milestone epoch.
XNetResult train_xnet(const Raster& x, const Raster& y, const PriorMap& prior,
                      const TrainConfig& cfg, const LossWeights& weights,
                      AblationVariant variant = AblationVariant::proposed);

ACENetResult train_acenet(const Raster& x, const Raster& y, const PriorMap& prior,
                          const TrainConfig& cfg, const LossWeights& weights,
                          AblationVariant variant = AblationVariant::proposed);

// Full-image inference with dropout disabled. Both networks are fully
// convolutional, so whole scenes are translated in one pass.
struct Translation {
  Raster x_hat;  // g(y) or dec_x(enc_y(y))
  Raster y_hat;  // f(x) or dec_y(enc_x(x))
  Raster x_cyc;  // g(f(x)) composition back to the X domain
  Raster y_cyc;
  std::optional<Raster> x_rec;  // autoencoder reconstructions (ACE only)
  std::optional<Raster> y_rec;
};

Translation translate(const XNetModel& model, const Raster& x, const Raster& y);
Translation translate(const ACENetModel& model, const Raster& x, const Raster& y);

// Difference image used for milestone prior refreshes and by the detection
// stage: combined translation residuals, min-max scaled to [0, 1], without
// filtering or thresholding.
std::vector<float> difference_from_translation(const Raster& x, const Raster& y,
                                               const Translation& t);

// Checkpoint container (magic "HCDM"): architecture descriptor followed by
// the float32 parameter blocks in declaration order.
void save_xnet(const XNetModel& model, const std::string& path);
void save_acenet(const ACENetModel& model, const std::string& path);
XNetModel load_xnet(const std::string& path);
ACENetModel load_acenet(const std::string& path);

// Which architecture a checkpoint holds.
enum class ModelKind { xnet, acenet };
ModelKind peek_model_kind(const std::string& path);

}  // namespace hetcd
