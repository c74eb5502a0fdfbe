#pragma once

#include <cstddef>
#include <vector>

#include "hetcd/nn/tensor.hpp"

namespace hetcd {

// Loss balance. Defaults follow the tuned operating point used for all
// experiments; the X-Net reads only w_cyc, w_alpha and w_theta.
struct LossWeights {
  double w_adv = 1.0;
  double w_ae = 0.2;
  double w_cyc = 2.0;
  double w_alpha = 3.0;
  double w_theta = 0.001;
};

// Per-pixel weights for the translation loss, one value per pixel of a
// patch. pi_from_alpha applies the monotonically decreasing map from change
// score to weight; the default is pi(a) = 1 - a.
template <typename T>
using PixelWeights = std::vector<T>;

template <typename T>
PixelWeights<T> pi_from_alpha(const std::vector<T>& alpha) {
  PixelWeights<T> w(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) w[i] = T(1) - alpha[i];
  return w;
}

// Weighted squared L2 distance between equal-sized patches:
//   (1/hw) * sum_i W_i * ||a_i - b_i||^2
// with the per-pixel vector norm taken over channels. Accumulation runs in
// double regardless of the storage type.
template <typename T>
double weighted_l2(const nn::Tensor<T>& a, const nn::Tensor<T>& b, const PixelWeights<T>& wts) {
  if (!a.same_shape(b)) throw ShapeError("weighted_l2: shape mismatch");
  const std::size_t pixels = static_cast<std::size_t>(a.h) * a.w;
  if (wts.size() != pixels) throw ShapeError("weighted_l2: weight vector size mismatch");
  double acc = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    double px = 0.0;
    for (int ch = 0; ch < a.c; ++ch) {
      const double d = static_cast<double>(a.v[p * a.c + ch]) - b.v[p * a.c + ch];
      px += d * d;
    }
    acc += static_cast<double>(wts[p]) * px;
  }
  return acc / static_cast<double>(pixels);
}

// d(weighted_l2)/da scaled by `coeff`, accumulated into d_a. The gradient
// with respect to b is the negation.
template <typename T>
void weighted_l2_backward(const nn::Tensor<T>& a, const nn::Tensor<T>& b,
                          const PixelWeights<T>& wts, double coeff, nn::Tensor<T>& d_a) {
  const std::size_t pixels = static_cast<std::size_t>(a.h) * a.w;
  const double scale = 2.0 * coeff / static_cast<double>(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    const double wp = scale * static_cast<double>(wts[p]);
    for (int ch = 0; ch < a.c; ++ch) {
      d_a.v[p * a.c + ch] += static_cast<T>(wp * (static_cast<double>(a.v[p * a.c + ch]) - b.v[p * a.c + ch]));
    }
  }
}

template <typename T>
double mse(const nn::Tensor<T>& a, const nn::Tensor<T>& b) {
  PixelWeights<T> ones(static_cast<std::size_t>(a.h) * a.w, T(1));
  return weighted_l2(a, b, ones);
}

template <typename T>
void mse_backward(const nn::Tensor<T>& a, const nn::Tensor<T>& b, double coeff, nn::Tensor<T>& d_a) {
  PixelWeights<T> ones(static_cast<std::size_t>(a.h) * a.w, T(1));
  weighted_l2_backward(a, b, ones, coeff, d_a);
}

// Translation loss: residuals of both cross-domain mappings, weighted by
// the change prior so likely-changed pixels do not constrain the mapping.
template <typename T>
double translation_loss(const nn::Tensor<T>& x, const nn::Tensor<T>& x_hat, const nn::Tensor<T>& y,
                        const nn::Tensor<T>& y_hat, const PixelWeights<T>& pi) {
  return weighted_l2(x_hat, x, pi) + weighted_l2(y_hat, y, pi);
}

// Cycle-consistency loss; unweighted, needs no pairing of the domains.
template <typename T>
double cycle_loss(const nn::Tensor<T>& x, const nn::Tensor<T>& x_cyc, const nn::Tensor<T>& y,
                  const nn::Tensor<T>& y_cyc) {
  return mse(x_cyc, x) + mse(y_cyc, y);
}

// Autoencoder reconstruction loss.
template <typename T>
double reconstruction_loss(const nn::Tensor<T>& x, const nn::Tensor<T>& x_rec, const nn::Tensor<T>& y,
                           const nn::Tensor<T>& y_rec) {
  return mse(x_rec, x) + mse(y_rec, y);
}

// Least-squares adversarial objectives over batches of discriminator
// outputs. Successful discrimination is D = 1 on codes from the X side and
// D = 0 on codes from the Y side; the encoders aim at the opposite.
struct AdversarialLosses {
  double discriminator = 0.0;  // (D(zx) - 1)^2 + D(zy)^2, batch means
  double encoders = 0.0;       // D(zx)^2 + (D(zy) - 1)^2, batch means
};

template <typename T>
AdversarialLosses adversarial_losses(const std::vector<T>& d_on_zx, const std::vector<T>& d_on_zy) {
  if (d_on_zx.empty() || d_on_zy.empty()) throw ShapeError("adversarial_losses: empty batch");
  AdversarialLosses out;
  double dx1 = 0.0, dx2 = 0.0;
  for (T v : d_on_zx) {
    const double d = static_cast<double>(v);
    dx1 += (d - 1.0) * (d - 1.0);
    dx2 += d * d;
  }
  double dy1 = 0.0, dy2 = 0.0;
  for (T v : d_on_zy) {
    const double d = static_cast<double>(v);
    dy1 += d * d;
    dy2 += (d - 1.0) * (d - 1.0);
  }
  out.discriminator = dx1 / d_on_zx.size() + dy1 / d_on_zy.size();
  out.encoders = dx2 / d_on_zx.size() + dy2 / d_on_zy.size();
  return out;
}

// Named pieces of a training objective, kept separate for the loss-curve
// CSV and for ablation toggles.
struct LossTerms {
  double adversarial_d = 0.0;
  double adversarial_z = 0.0;
  double reconstruction = 0.0;
  double cycle = 0.0;
  double translation = 0.0;
  double weight_norm = 0.0;  // ||theta||^2, weights only
};

inline double total_loss_xnet(const LossTerms& t, const LossWeights& w) {
  return w.w_cyc * t.cycle + w.w_alpha * t.translation + w.w_theta * t.weight_norm;
}

inline double total_loss_acenet(const LossTerms& t, const LossWeights& w) {
  return w.w_adv * (t.adversarial_z + t.adversarial_d) + w.w_ae * t.reconstruction +
         w.w_cyc * t.cycle + w.w_alpha * t.translation + w.w_theta * t.weight_norm;
}

}  // namespace hetcd
