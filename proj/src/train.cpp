#include <algorithm>
#include <cmath>

#include "hetcd/augment.hpp"
#include "hetcd/change_extraction.hpp"
#include "hetcd/error.hpp"
#include "hetcd/nn/init.hpp"
#include "hetcd/parallel.hpp"
#include "hetcd/tensor_bridge.hpp"
#include "hetcd/translators.hpp"

namespace hetcd {

namespace {

using Tensorf = nn::Tensor<float>;

enum StreamId : uint64_t {
  kSampling = 0x21,
  kAugment = 0x22,
  kDropout = 0x23,
  kRandomPrior = 0x24,
};

// Per-item dropout streams are derived from (seed, phase, global item id) so
// the result is independent of the thread schedule and of whether other
// phases are active.
Rng item_dropout_rng(uint64_t seed, uint64_t phase, uint64_t global_item) {
  return Rng::stream(seed, (kDropout << 32) ^ (phase << 24) ^ global_item);
}

struct PatchTriple {
  Tensorf x;
  Tensorf y;
  PixelWeights<float> pi;
};

std::vector<PatchTriple> sample_batch(const Tensorf& img_x, const Tensorf& img_y,
                                      const std::vector<float>& pi_image, int patch, int batch_size,
                                      bool augment, Rng& sampling_rng, Rng& augment_rng) {
  const int max_y = img_x.h - patch;
  const int max_x = img_x.w - patch;
  Tensorf pi_tensor(img_x.h, img_x.w, 1);
  pi_tensor.v = pi_image;

  std::vector<PatchTriple> batch;
  batch.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const int y0 = static_cast<int>(sampling_rng.below(max_y + 1));
    const int x0 = static_cast<int>(sampling_rng.below(max_x + 1));
    PatchTriple t;
    t.x = extract_patch(img_x, y0, x0, patch);
    t.y = extract_patch(img_y, y0, x0, patch);
    Tensorf pi_patch = extract_patch(pi_tensor, y0, x0, patch);
    if (augment) {
      const Geometry g = random_geometry(augment_rng);
      t.x = apply_geometry(t.x, g);
      t.y = apply_geometry(t.y, g);
      pi_patch = apply_geometry(pi_patch, g);
    }
    t.pi = std::move(pi_patch.v);
    batch.push_back(std::move(t));
  }
  return batch;
}

void add_inplace(Tensorf& a, const Tensorf& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

void accumulate(nn::ConvNetGrads<float>& into, const nn::ConvNetGrads<float>& from) {
  for (std::size_t l = 0; l < into.layers.size(); ++l) {
    for (std::size_t i = 0; i < into.layers[l].weights.size(); ++i) {
      into.layers[l].weights[i] += from.layers[l].weights[i];
    }
    for (std::size_t i = 0; i < into.layers[l].biases.size(); ++i) {
      into.layers[l].biases[i] += from.layers[l].biases[i];
    }
  }
}

void accumulate(nn::DiscriminatorGrads<float>& into, const nn::DiscriminatorGrads<float>& from) {
  accumulate(into.convs, from.convs);
  for (std::size_t i = 0; i < into.head.weights.size(); ++i) into.head.weights[i] += from.head.weights[i];
  into.head.bias += from.head.bias;
}

void add_terms(LossTerms& into, const LossTerms& from) {
  into.adversarial_d += from.adversarial_d;
  into.adversarial_z += from.adversarial_z;
  into.reconstruction += from.reconstruction;
  into.cycle += from.cycle;
  into.translation += from.translation;
}

void scale_terms(LossTerms& t, double s) {
  t.adversarial_d *= s;
  t.adversarial_z *= s;
  t.reconstruction *= s;
  t.cycle *= s;
  t.translation *= s;
}

std::vector<float> initial_pi(const PriorMap& prior, AblationVariant variant, uint64_t seed) {
  std::vector<float> pi(prior.alpha.size());
  if (variant == AblationVariant::no_alpha) {
    Rng rng = Rng::stream(seed, kRandomPrior);
    for (float& v : pi) v = 1.0f - static_cast<float>(rng.uniform());
  } else {
    for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = static_cast<float>(1.0 - prior.alpha[i]);
  }
  return pi;
}

void validate_training_inputs(const Raster& x, const Raster& y, const PriorMap& prior) {
  if (x.height != y.height || x.width != y.width) {
    throw ShapeError("train: images must be spatially aligned");
  }
  if (prior.height != x.height || prior.width != x.width) {
    throw ShapeError("train: prior must be aligned with the images");
  }
}

// Least-squares update of one output-space discriminator: real patches
// labelled 1, translated patches labelled 0. Returns the batch loss.
double output_discriminator_step(nn::Discriminator<float>& d, nn::AdamOptimizer<float>& opt,
                                 const std::vector<const Tensorf*>& real,
                                 const std::vector<const Tensorf*>& fake, double weight_decay,
                                 double dropout_rate, uint64_t seed, uint64_t phase,
                                 uint64_t first_item, int threads) {
  const std::size_t n = real.size();
  const double inv_batch = 1.0 / static_cast<double>(n);
  std::vector<nn::DiscriminatorGrads<float>> item_grads(n);
  std::vector<double> item_loss(n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    item_grads[i].resize_like(d);
    Rng rng = item_dropout_rng(seed, phase, first_item + i);
    nn::DiscriminatorCache<float> cache_r, cache_f;
    const float out_r = nn::discriminator_forward(d, *real[i], true, dropout_rate, rng, cache_r);
    const float out_f = nn::discriminator_forward(d, *fake[i], true, dropout_rate, rng, cache_f);
    item_loss[i] = (out_r - 1.0) * (out_r - 1.0) + static_cast<double>(out_f) * out_f;
    nn::discriminator_backward(d, cache_r, static_cast<float>(2.0 * (out_r - 1.0) * inv_batch),
                               item_grads[i]);
    nn::discriminator_backward(d, cache_f, static_cast<float>(2.0 * out_f * inv_batch),
                               item_grads[i]);
  });
  nn::DiscriminatorGrads<float> grads;
  grads.resize_like(d);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    accumulate(grads, item_grads[i]);
    loss += item_loss[i];
  }
  std::vector<nn::ParamBlock<float>> pb, gb;
  nn::collect_blocks(d, pb);
  nn::collect_blocks(grads, gb);
  nn::add_weight_decay_grad(pb, gb, weight_decay);
  opt.apply(pb, gb);
  return loss * inv_batch;
}

// Generator-side least-squares term towards D(fake) = 1; gradient flows
// into d_fake only, the discriminator parameters stay fixed.
double output_generator_term(const nn::Discriminator<float>& d, const Tensorf& fake, double coeff,
                             double dropout_rate, Rng& rng, Tensorf& d_fake) {
  nn::DiscriminatorCache<float> cache;
  const float out = nn::discriminator_forward(d, fake, true, dropout_rate, rng, cache);
  nn::DiscriminatorGrads<float> scratch;
  scratch.resize_like(const_cast<nn::Discriminator<float>&>(d));
  const Tensorf g = nn::discriminator_backward(d, cache, static_cast<float>(2.0 * (out - 1.0) * coeff),
                                               scratch);
  add_inplace(d_fake, g);
  return (out - 1.0) * (out - 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// X-Net
// ---------------------------------------------------------------------------

XNetResult train_xnet(const Raster& x, const Raster& y, const PriorMap& prior,
                      const TrainConfig& cfg, const LossWeights& weights, AblationVariant variant) {
  if (variant == AblationVariant::no_discr || variant == AblationVariant::no_recon) {
    throw ConfigError("ablation variant " + to_string(variant) + " applies to the ACE-Net only");
  }
  validate_training_inputs(x, y, prior);

  const int patch = std::min({cfg.patch_hw, x.height, x.width});
  const Tensorf img_x = tensor_from_raster(x);
  const Tensorf img_y = tensor_from_raster(y);

  XNetResult result;
  result.model = make_xnet(x.channels, y.channels, cfg.seed);
  XNetModel& m = result.model;

  LossWeights w = weights;
  const bool use_cycle = variant != AblationVariant::no_cycle && w.w_cyc != 0.0;
  if (variant == AblationVariant::no_cycle) w.w_cyc = 0.0;
  const bool use_output_discr = variant == AblationVariant::discr_output;

  std::vector<float> pi_image = initial_pi(prior, variant, cfg.seed);

  std::vector<nn::ParamBlock<float>> params;
  nn::collect_blocks(m.f, params);
  nn::collect_blocks(m.g, params);
  nn::AdamOptimizer<float> opt;
  opt.cfg.lr = cfg.lr;
  opt.init(params);

  nn::Discriminator<float> discr_x, discr_y;
  nn::AdamOptimizer<float> opt_dx, opt_dy;
  if (use_output_discr) {
    ACENetModel donor = make_acenet(1, 1, cfg.seed ^ 0x0d15);  // reuse the discriminator shape
    discr_x = donor.discr;
    discr_y = donor.discr;
    Rng rng = Rng::stream(cfg.seed, 0x31);
    discr_x.convs.layers[0] = nn::ConvLayer<float>(x.channels, 64, nn::Activation::leaky_relu);
    discr_y.convs.layers[0] = nn::ConvLayer<float>(y.channels, 64, nn::Activation::leaky_relu);
    for (auto* d : {&discr_x, &discr_y}) {
      for (auto& l : d->convs.layers) nn::glorot_truncated_init(l, rng);
      nn::glorot_truncated_init(d->head, rng);
    }
    std::vector<nn::ParamBlock<float>> bx, by;
    nn::collect_blocks(discr_x, bx);
    nn::collect_blocks(discr_y, by);
    opt_dx.cfg.lr = cfg.lr;
    opt_dy.cfg.lr = cfg.lr;
    opt_dx.init(bx);
    opt_dy.init(by);
  }

  Rng sampling_rng = Rng::stream(cfg.seed, kSampling);
  Rng augment_rng = Rng::stream(cfg.seed, kAugment);

  struct ItemWork {
    LossTerms terms;
    nn::ConvNetGrads<float> gf, gg;
  };

  const double inv_batch = 1.0 / cfg.batch_size;
  uint64_t global_item = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    LossTerms epoch_terms;
    for (int batch = 0; batch < cfg.batches_per_epoch; ++batch) {
      std::vector<PatchTriple> triples = sample_batch(img_x, img_y, pi_image, patch, cfg.batch_size,
                                                      cfg.augmentation, sampling_rng, augment_rng);

      double batch_adv_d = 0.0;
      if (use_output_discr) {
        // Discriminator step on fakes produced by the current generators.
        std::vector<Tensorf> fakes_x(triples.size()), fakes_y(triples.size());
        std::vector<const Tensorf*> real_x, real_y, fake_x, fake_y;
        parallel_for(triples.size(), cfg.threads, [&](std::size_t i) {
          Rng rng = item_dropout_rng(cfg.seed, 1, global_item + i);
          nn::ConvNetCache<float> cf, cg;
          fakes_y[i] = nn::convnet_forward(m.f, triples[i].x, true, cfg.dropout_rate, rng, cf);
          fakes_x[i] = nn::convnet_forward(m.g, triples[i].y, true, cfg.dropout_rate, rng, cg);
        });
        for (std::size_t i = 0; i < triples.size(); ++i) {
          real_x.push_back(&triples[i].x);
          real_y.push_back(&triples[i].y);
          fake_x.push_back(&fakes_x[i]);
          fake_y.push_back(&fakes_y[i]);
        }
        batch_adv_d =
            output_discriminator_step(discr_x, opt_dx, real_x, fake_x, w.w_theta, cfg.dropout_rate,
                                      cfg.seed, 2, global_item, cfg.threads) +
            output_discriminator_step(discr_y, opt_dy, real_y, fake_y, w.w_theta, cfg.dropout_rate,
                                      cfg.seed, 3, global_item, cfg.threads);
      }

      std::vector<ItemWork> items(triples.size());
      parallel_for(triples.size(), cfg.threads, [&](std::size_t i) {
        ItemWork& out = items[i];
        out.gf.resize_like(m.f);
        out.gg.resize_like(m.g);
        Rng rng = item_dropout_rng(cfg.seed, 0, global_item + i);
        const PatchTriple& t = triples[i];

        nn::ConvNetCache<float> cf1, cg1, cf2, cg2;
        const Tensorf y_hat = nn::convnet_forward(m.f, t.x, true, cfg.dropout_rate, rng, cf1);
        const Tensorf x_hat = nn::convnet_forward(m.g, t.y, true, cfg.dropout_rate, rng, cg1);
        Tensorf x_cyc, y_cyc;
        if (use_cycle) {
          x_cyc = nn::convnet_forward(m.g, y_hat, true, cfg.dropout_rate, rng, cg2);
          y_cyc = nn::convnet_forward(m.f, x_hat, true, cfg.dropout_rate, rng, cf2);
        }

        out.terms.translation = weighted_l2(x_hat, t.x, t.pi) + weighted_l2(y_hat, t.y, t.pi);
        Tensorf d_xhat = nn::zeros_like(x_hat);
        Tensorf d_yhat = nn::zeros_like(y_hat);
        if (use_cycle) {
          out.terms.cycle = mse(x_cyc, t.x) + mse(y_cyc, t.y);
          Tensorf d_xcyc = nn::zeros_like(x_cyc);
          mse_backward(x_cyc, t.x, w.w_cyc * inv_batch, d_xcyc);
          add_inplace(d_yhat, nn::convnet_backward(m.g, cg2, d_xcyc, out.gg));
          Tensorf d_ycyc = nn::zeros_like(y_cyc);
          mse_backward(y_cyc, t.y, w.w_cyc * inv_batch, d_ycyc);
          add_inplace(d_xhat, nn::convnet_backward(m.f, cf2, d_ycyc, out.gf));
        }
        if (use_output_discr) {
          out.terms.adversarial_z =
              output_generator_term(discr_x, x_hat, w.w_adv * inv_batch, cfg.dropout_rate, rng, d_xhat) +
              output_generator_term(discr_y, y_hat, w.w_adv * inv_batch, cfg.dropout_rate, rng, d_yhat);
        }
        weighted_l2_backward(x_hat, t.x, t.pi, w.w_alpha * inv_batch, d_xhat);
        weighted_l2_backward(y_hat, t.y, t.pi, w.w_alpha * inv_batch, d_yhat);
        nn::convnet_backward(m.g, cg1, d_xhat, out.gg);
        nn::convnet_backward(m.f, cf1, d_yhat, out.gf);
      });

      nn::ConvNetGrads<float> gf, gg;
      gf.resize_like(m.f);
      gg.resize_like(m.g);
      LossTerms batch_terms;
      for (const ItemWork& it : items) {
        accumulate(gf, it.gf);
        accumulate(gg, it.gg);
        add_terms(batch_terms, it.terms);
      }
      scale_terms(batch_terms, inv_batch);
      batch_terms.adversarial_d = batch_adv_d;

      std::vector<nn::ParamBlock<float>> grad_blocks;
      nn::collect_blocks(gf, grad_blocks);
      nn::collect_blocks(gg, grad_blocks);
      nn::add_weight_decay_grad(params, grad_blocks, w.w_theta);
      opt.apply(params, grad_blocks);

      add_terms(epoch_terms, batch_terms);
      global_item += triples.size();
    }

    scale_terms(epoch_terms, 1.0 / cfg.batches_per_epoch);
    epoch_terms.weight_norm = nn::weight_squared_norm(params);
    EpochStats stats;
    stats.epoch = epoch;
    stats.terms = epoch_terms;
    stats.total = total_loss_xnet(epoch_terms, w) +
                  (use_output_discr ? w.w_adv * (epoch_terms.adversarial_z + epoch_terms.adversarial_d) : 0.0);
    result.history.push_back(stats);

    const bool milestone = std::find(cfg.milestones.begin(), cfg.milestones.end(), epoch) !=
                           cfg.milestones.end();
    if (milestone && variant != AblationVariant::no_milestones) {
      const Translation t = translate(m, x, y);
      const std::vector<float> d = difference_from_translation(x, y, t);
      for (std::size_t i = 0; i < pi_image.size(); ++i) pi_image[i] = 1.0f - d[i];
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// ACE-Net
// ---------------------------------------------------------------------------

ACENetResult train_acenet(const Raster& x, const Raster& y, const PriorMap& prior,
                          const TrainConfig& cfg, const LossWeights& weights,
                          AblationVariant variant) {
  validate_training_inputs(x, y, prior);

  const int patch = std::min({cfg.patch_hw, x.height, x.width});
  const Tensorf img_x = tensor_from_raster(x);
  const Tensorf img_y = tensor_from_raster(y);

  ACENetResult result;
  result.model = make_acenet(x.channels, y.channels, cfg.seed);
  ACENetModel& m = result.model;

  LossWeights w = weights;
  const bool use_cycle = variant != AblationVariant::no_cycle && w.w_cyc != 0.0;
  const bool use_recon = variant != AblationVariant::no_recon && w.w_ae != 0.0;
  const bool use_discr = variant != AblationVariant::no_discr && w.w_adv != 0.0;
  const bool use_output_discr = variant == AblationVariant::discr_output;
  if (!use_cycle) w.w_cyc = 0.0;
  if (!use_recon) w.w_ae = 0.0;

  std::vector<float> pi_image = initial_pi(prior, variant, cfg.seed);

  std::vector<nn::ParamBlock<float>> ae_params;
  nn::collect_blocks(m.enc_x, ae_params);
  nn::collect_blocks(m.enc_y, ae_params);
  nn::collect_blocks(m.dec_x, ae_params);
  nn::collect_blocks(m.dec_y, ae_params);
  nn::AdamOptimizer<float> opt_ae;
  opt_ae.cfg.lr = cfg.lr;
  opt_ae.init(ae_params);

  std::vector<nn::ParamBlock<float>> d_params;
  nn::collect_blocks(m.discr, d_params);
  nn::AdamOptimizer<float> opt_d;
  opt_d.cfg.lr = cfg.lr;
  opt_d.init(d_params);

  nn::Discriminator<float> discr_x, discr_y;
  nn::AdamOptimizer<float> opt_dx, opt_dy;
  if (use_output_discr) {
    Rng rng = Rng::stream(cfg.seed, 0x32);
    auto build = [&rng](int channels) {
      nn::Discriminator<float> d;
      d.convs.layers.emplace_back(channels, 64, nn::Activation::leaky_relu);
      d.convs.layers.emplace_back(64, 32, nn::Activation::leaky_relu);
      d.convs.layers.emplace_back(32, 16, nn::Activation::leaky_relu);
      for (auto& l : d.convs.layers) nn::glorot_truncated_init(l, rng);
      d.head = nn::DenseLayer<float>(16, nn::Activation::sigmoid);
      nn::glorot_truncated_init(d.head, rng);
      return d;
    };
    discr_x = build(x.channels);
    discr_y = build(y.channels);
    std::vector<nn::ParamBlock<float>> bx, by;
    nn::collect_blocks(discr_x, bx);
    nn::collect_blocks(discr_y, by);
    opt_dx.cfg.lr = cfg.lr;
    opt_dy.cfg.lr = cfg.lr;
    opt_dx.init(bx);
    opt_dy.init(by);
  }

  Rng sampling_rng = Rng::stream(cfg.seed, kSampling);
  Rng augment_rng = Rng::stream(cfg.seed, kAugment);

  struct ItemWork {
    LossTerms terms;
    nn::ConvNetGrads<float> g_enc_x, g_enc_y, g_dec_x, g_dec_y;
  };

  const double inv_batch = 1.0 / cfg.batch_size;
  uint64_t global_item = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    LossTerms epoch_terms;
    for (int batch = 0; batch < cfg.batches_per_epoch; ++batch) {
      std::vector<PatchTriple> triples = sample_batch(img_x, img_y, pi_image, patch, cfg.batch_size,
                                                      cfg.augmentation, sampling_rng, augment_rng);

      double batch_adv_d = 0.0;
      if (use_discr) {
        // Discriminator step: encoders act as fixed code generators here, so
        // only the discriminator accumulates gradients.
        std::vector<nn::DiscriminatorGrads<float>> item_grads(triples.size());
        std::vector<double> item_loss(triples.size(), 0.0);
        parallel_for(triples.size(), cfg.threads, [&](std::size_t i) {
          item_grads[i].resize_like(m.discr);
          Rng rng = item_dropout_rng(cfg.seed, 4, global_item + i);
          nn::ConvNetCache<float> cex, cey;
          const Tensorf zx = nn::convnet_forward(m.enc_x, triples[i].x, true, cfg.dropout_rate, rng, cex);
          const Tensorf zy = nn::convnet_forward(m.enc_y, triples[i].y, true, cfg.dropout_rate, rng, cey);
          nn::DiscriminatorCache<float> cdx, cdy;
          const float dzx = nn::discriminator_forward(m.discr, zx, true, cfg.dropout_rate, rng, cdx);
          const float dzy = nn::discriminator_forward(m.discr, zy, true, cfg.dropout_rate, rng, cdy);
          item_loss[i] = (dzx - 1.0) * (dzx - 1.0) + static_cast<double>(dzy) * dzy;
          nn::discriminator_backward(m.discr, cdx, static_cast<float>(2.0 * (dzx - 1.0) * inv_batch),
                                     item_grads[i]);
          nn::discriminator_backward(m.discr, cdy, static_cast<float>(2.0 * dzy * inv_batch),
                                     item_grads[i]);
        });
        nn::DiscriminatorGrads<float> d_grads;
        d_grads.resize_like(m.discr);
        for (std::size_t i = 0; i < triples.size(); ++i) {
          accumulate(d_grads, item_grads[i]);
          batch_adv_d += item_loss[i];
        }
        batch_adv_d *= inv_batch;
        std::vector<nn::ParamBlock<float>> gb;
        nn::collect_blocks(d_grads, gb);
        nn::add_weight_decay_grad(d_params, gb, w.w_theta);
        opt_d.apply(d_params, gb);
      }

      double batch_out_adv_d = 0.0;
      if (use_output_discr) {
        std::vector<Tensorf> fakes_x(triples.size()), fakes_y(triples.size());
        parallel_for(triples.size(), cfg.threads, [&](std::size_t i) {
          Rng rng = item_dropout_rng(cfg.seed, 5, global_item + i);
          nn::ConvNetCache<float> c1, c2, c3, c4;
          const Tensorf zx = nn::convnet_forward(m.enc_x, triples[i].x, true, cfg.dropout_rate, rng, c1);
          const Tensorf zy = nn::convnet_forward(m.enc_y, triples[i].y, true, cfg.dropout_rate, rng, c2);
          fakes_y[i] = nn::convnet_forward(m.dec_y, zx, true, cfg.dropout_rate, rng, c3);
          fakes_x[i] = nn::convnet_forward(m.dec_x, zy, true, cfg.dropout_rate, rng, c4);
        });
        std::vector<const Tensorf*> real_x, real_y, fake_x, fake_y;
        for (std::size_t i = 0; i < triples.size(); ++i) {
          real_x.push_back(&triples[i].x);
          real_y.push_back(&triples[i].y);
          fake_x.push_back(&fakes_x[i]);
          fake_y.push_back(&fakes_y[i]);
        }
        batch_out_adv_d =
            output_discriminator_step(discr_x, opt_dx, real_x, fake_x, w.w_theta, cfg.dropout_rate,
                                      cfg.seed, 6, global_item, cfg.threads) +
            output_discriminator_step(discr_y, opt_dy, real_y, fake_y, w.w_theta, cfg.dropout_rate,
                                      cfg.seed, 7, global_item, cfg.threads);
      }

      // Generator / autoencoder step; the code discriminator is frozen but
      // still propagates the alignment gradient into the encoders.
      std::vector<ItemWork> items(triples.size());
      parallel_for(triples.size(), cfg.threads, [&](std::size_t i) {
        ItemWork& out = items[i];
        out.g_enc_x.resize_like(m.enc_x);
        out.g_enc_y.resize_like(m.enc_y);
        out.g_dec_x.resize_like(m.dec_x);
        out.g_dec_y.resize_like(m.dec_y);
        Rng rng = item_dropout_rng(cfg.seed, 0, global_item + i);
        const PatchTriple& t = triples[i];

        nn::ConvNetCache<float> ce_x, ce_y, cd_xr, cd_yr, cd_xt, cd_yt, ce_y2, ce_x2, cd_xc, cd_yc;
        const Tensorf zx = nn::convnet_forward(m.enc_x, t.x, true, cfg.dropout_rate, rng, ce_x);
        const Tensorf zy = nn::convnet_forward(m.enc_y, t.y, true, cfg.dropout_rate, rng, ce_y);
        Tensorf x_rec, y_rec;
        if (use_recon) {
          x_rec = nn::convnet_forward(m.dec_x, zx, true, cfg.dropout_rate, rng, cd_xr);
          y_rec = nn::convnet_forward(m.dec_y, zy, true, cfg.dropout_rate, rng, cd_yr);
        }
        const Tensorf y_hat = nn::convnet_forward(m.dec_y, zx, true, cfg.dropout_rate, rng, cd_yt);
        const Tensorf x_hat = nn::convnet_forward(m.dec_x, zy, true, cfg.dropout_rate, rng, cd_xt);
        Tensorf x_cyc, y_cyc, z_yhat, z_xhat;
        if (use_cycle) {
          z_yhat = nn::convnet_forward(m.enc_y, y_hat, true, cfg.dropout_rate, rng, ce_y2);
          x_cyc = nn::convnet_forward(m.dec_x, z_yhat, true, cfg.dropout_rate, rng, cd_xc);
          z_xhat = nn::convnet_forward(m.enc_x, x_hat, true, cfg.dropout_rate, rng, ce_x2);
          y_cyc = nn::convnet_forward(m.dec_y, z_xhat, true, cfg.dropout_rate, rng, cd_yc);
        }
        nn::DiscriminatorCache<float> cD_zx, cD_zy;
        float dzx = 0.0f, dzy = 0.0f;
        if (use_discr) {
          dzx = nn::discriminator_forward(m.discr, zx, true, cfg.dropout_rate, rng, cD_zx);
          dzy = nn::discriminator_forward(m.discr, zy, true, cfg.dropout_rate, rng, cD_zy);
          out.terms.adversarial_z =
              static_cast<double>(dzx) * dzx + (dzy - 1.0) * (dzy - 1.0);
        }

        out.terms.translation = weighted_l2(x_hat, t.x, t.pi) + weighted_l2(y_hat, t.y, t.pi);
        if (use_recon) out.terms.reconstruction = mse(x_rec, t.x) + mse(y_rec, t.y);

        Tensorf d_zx(zx.h, zx.w, zx.c);
        Tensorf d_zy(zy.h, zy.w, zy.c);
        Tensorf d_xhat = nn::zeros_like(x_hat);
        Tensorf d_yhat = nn::zeros_like(y_hat);

        if (use_cycle) {
          out.terms.cycle = mse(x_cyc, t.x) + mse(y_cyc, t.y);
          Tensorf d_xcyc = nn::zeros_like(x_cyc);
          mse_backward(x_cyc, t.x, w.w_cyc * inv_batch, d_xcyc);
          const Tensorf d_zyh = nn::convnet_backward(m.dec_x, cd_xc, d_xcyc, out.g_dec_x);
          add_inplace(d_yhat, nn::convnet_backward(m.enc_y, ce_y2, d_zyh, out.g_enc_y));
          Tensorf d_ycyc = nn::zeros_like(y_cyc);
          mse_backward(y_cyc, t.y, w.w_cyc * inv_batch, d_ycyc);
          const Tensorf d_zxh = nn::convnet_backward(m.dec_y, cd_yc, d_ycyc, out.g_dec_y);
          add_inplace(d_xhat, nn::convnet_backward(m.enc_x, ce_x2, d_zxh, out.g_enc_x));
        }
        if (use_output_discr) {
          out.terms.adversarial_z +=
              output_generator_term(discr_x, x_hat, w.w_adv * inv_batch, cfg.dropout_rate, rng, d_xhat) +
              output_generator_term(discr_y, y_hat, w.w_adv * inv_batch, cfg.dropout_rate, rng, d_yhat);
        }
        weighted_l2_backward(x_hat, t.x, t.pi, w.w_alpha * inv_batch, d_xhat);
        weighted_l2_backward(y_hat, t.y, t.pi, w.w_alpha * inv_batch, d_yhat);
        add_inplace(d_zy, nn::convnet_backward(m.dec_x, cd_xt, d_xhat, out.g_dec_x));
        add_inplace(d_zx, nn::convnet_backward(m.dec_y, cd_yt, d_yhat, out.g_dec_y));

        if (use_recon) {
          Tensorf d_xrec = nn::zeros_like(x_rec);
          mse_backward(x_rec, t.x, w.w_ae * inv_batch, d_xrec);
          add_inplace(d_zx, nn::convnet_backward(m.dec_x, cd_xr, d_xrec, out.g_dec_x));
          Tensorf d_yrec = nn::zeros_like(y_rec);
          mse_backward(y_rec, t.y, w.w_ae * inv_batch, d_yrec);
          add_inplace(d_zy, nn::convnet_backward(m.dec_y, cd_yr, d_yrec, out.g_dec_y));
        }
        if (use_discr) {
          nn::DiscriminatorGrads<float> scratch;
          scratch.resize_like(m.discr);
          add_inplace(d_zx, nn::discriminator_backward(
                                m.discr, cD_zx, static_cast<float>(w.w_adv * 2.0 * dzx * inv_batch),
                                scratch));
          add_inplace(d_zy, nn::discriminator_backward(
                                m.discr, cD_zy,
                                static_cast<float>(w.w_adv * 2.0 * (dzy - 1.0) * inv_batch), scratch));
        }
        nn::convnet_backward(m.enc_x, ce_x, d_zx, out.g_enc_x);
        nn::convnet_backward(m.enc_y, ce_y, d_zy, out.g_enc_y);
      });

      nn::ConvNetGrads<float> g_enc_x, g_enc_y, g_dec_x, g_dec_y;
      g_enc_x.resize_like(m.enc_x);
      g_enc_y.resize_like(m.enc_y);
      g_dec_x.resize_like(m.dec_x);
      g_dec_y.resize_like(m.dec_y);
      LossTerms batch_terms;
      for (const ItemWork& it : items) {
        accumulate(g_enc_x, it.g_enc_x);
        accumulate(g_enc_y, it.g_enc_y);
        accumulate(g_dec_x, it.g_dec_x);
        accumulate(g_dec_y, it.g_dec_y);
        add_terms(batch_terms, it.terms);
      }
      scale_terms(batch_terms, inv_batch);
      batch_terms.adversarial_d = batch_adv_d + batch_out_adv_d;

      std::vector<nn::ParamBlock<float>> grad_blocks;
      nn::collect_blocks(g_enc_x, grad_blocks);
      nn::collect_blocks(g_enc_y, grad_blocks);
      nn::collect_blocks(g_dec_x, grad_blocks);
      nn::collect_blocks(g_dec_y, grad_blocks);
      nn::add_weight_decay_grad(ae_params, grad_blocks, w.w_theta);
      opt_ae.apply(ae_params, grad_blocks);

      add_terms(epoch_terms, batch_terms);
      global_item += triples.size();
    }

    scale_terms(epoch_terms, 1.0 / cfg.batches_per_epoch);
    epoch_terms.weight_norm =
        nn::weight_squared_norm(ae_params) + nn::weight_squared_norm(d_params);
    EpochStats stats;
    stats.epoch = epoch;
    stats.terms = epoch_terms;
    stats.total = total_loss_acenet(epoch_terms, w);
    result.history.push_back(stats);

    const bool milestone = std::find(cfg.milestones.begin(), cfg.milestones.end(), epoch) !=
                           cfg.milestones.end();
    if (milestone && variant != AblationVariant::no_milestones) {
      const Translation t = translate(m, x, y);
      const std::vector<float> d = difference_from_translation(x, y, t);
      for (std::size_t i = 0; i < pi_image.size(); ++i) pi_image[i] = 1.0f - d[i];
    }
  }
  return result;
}

}  // namespace hetcd
