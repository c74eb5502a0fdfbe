#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hetcd/losses.hpp"
#include "hetcd/nn/gradcheck.hpp"
#include "hetcd/rng.hpp"

using namespace hetcd;
using Tensor = nn::Tensor<double>;

namespace {

Tensor random_tensor(int h, int w, int c, Rng& rng) {
  Tensor t(h, w, c);
  for (double& v : t.v) v = rng.uniform(-1.0, 1.0);
  return t;
}

PixelWeights<double> random_weights(int h, int w, Rng& rng) {
  PixelWeights<double> wts(static_cast<std::size_t>(h) * w);
  for (double& v : wts) v = rng.uniform(0.0, 1.0);
  return wts;
}

}  // namespace

TEST_CASE("weighted_l2 with unit weights equals the unweighted distance") {
  Rng rng(1);
  Tensor a = random_tensor(4, 5, 2, rng);
  Tensor b = random_tensor(4, 5, 2, rng);
  PixelWeights<double> ones(20, 1.0);
  CHECK(weighted_l2(a, b, ones) == doctest::Approx(mse(a, b)));
}

TEST_CASE("weighted_l2 of identical patches is zero") {
  Rng rng(2);
  Tensor a = random_tensor(3, 3, 4, rng);
  PixelWeights<double> wts = random_weights(3, 3, rng);
  CHECK(weighted_l2(a, a, wts) == 0.0);
}

TEST_CASE("weighted_l2 single-pixel hand value") {
  // One pixel, two channels: residual (1, 0), weight 1/2 -> 0.5.
  Tensor a(1, 1, 2), b(1, 1, 2);
  a.v = {1.0, 0.0};
  b.v = {0.0, 0.0};
  PixelWeights<double> wts = {0.5};
  CHECK(weighted_l2(a, b, wts) == doctest::Approx(0.5));
}

TEST_CASE("translation loss: perfect translation, excluded pixels, symmetry") {
  Rng rng(3);
  Tensor x = random_tensor(4, 4, 2, rng);
  Tensor y = random_tensor(4, 4, 3, rng);
  PixelWeights<double> pi = random_weights(4, 4, rng);

  CHECK(translation_loss(x, x, y, y, pi) == 0.0);

  Tensor x_hat = random_tensor(4, 4, 2, rng);
  Tensor y_hat = random_tensor(4, 4, 3, rng);
  PixelWeights<double> zero(16, 0.0);
  CHECK(translation_loss(x, x_hat, y, y_hat, zero) == 0.0);

  // Swapping the (x, x_hat) and (y, y_hat) pairs when shapes agree leaves
  // the sum unchanged.
  Tensor y2 = random_tensor(4, 4, 2, rng);
  Tensor y2_hat = random_tensor(4, 4, 2, rng);
  CHECK(translation_loss(x, x_hat, y2, y2_hat, pi) ==
        doctest::Approx(translation_loss(y2, y2_hat, x, x_hat, pi)));
}

TEST_CASE("cycle loss: identity, constant offset, nonnegative") {
  Rng rng(4);
  Tensor x = random_tensor(5, 5, 2, rng);
  Tensor y = random_tensor(5, 5, 1, rng);
  CHECK(cycle_loss(x, x, y, y) == 0.0);

  // Constant per-channel offset c: the loss picks up ||c||^2.
  Tensor x_off = x;
  const double c0 = 0.3, c1 = -0.2;
  for (int yy = 0; yy < 5; ++yy)
    for (int xx = 0; xx < 5; ++xx) {
      x_off.at(yy, xx, 0) += c0;
      x_off.at(yy, xx, 1) += c1;
    }
  CHECK(cycle_loss(x, x_off, y, y) == doctest::Approx(c0 * c0 + c1 * c1));

  Tensor x_cyc = random_tensor(5, 5, 2, rng);
  Tensor y_cyc = random_tensor(5, 5, 1, rng);
  CHECK(cycle_loss(x, x_cyc, y, y_cyc) >= 0.0);
}

TEST_CASE("reconstruction loss mirrors the cycle loss pattern") {
  Rng rng(5);
  Tensor x = random_tensor(3, 4, 2, rng);
  Tensor y = random_tensor(3, 4, 1, rng);
  CHECK(reconstruction_loss(x, x, y, y) == 0.0);
  Tensor xr = random_tensor(3, 4, 2, rng);
  Tensor yr = random_tensor(3, 4, 1, rng);
  CHECK(reconstruction_loss(x, xr, y, yr) >= 0.0);
  CHECK(reconstruction_loss(x, xr, y, yr) == doctest::Approx(mse(xr, x) + mse(yr, y)));
}

TEST_CASE("adversarial losses: perfect discriminator and midpoint") {
  std::vector<double> dx_perfect = {1.0, 1.0, 1.0};
  std::vector<double> dy_perfect = {0.0, 0.0};
  AdversarialLosses perfect = adversarial_losses(dx_perfect, dy_perfect);
  CHECK(perfect.discriminator == doctest::Approx(0.0));
  CHECK(perfect.encoders == doctest::Approx(2.0));

  std::vector<double> half = {0.5, 0.5};
  AdversarialLosses mid = adversarial_losses(half, half);
  CHECK(mid.discriminator == doctest::Approx(0.5));
  CHECK(mid.encoders == doctest::Approx(0.5));
}

TEST_CASE("adversarial losses: L_D + L_Z >= 1 for any outputs") {
  // Per output t the two objectives share (t-1)^2 + t^2, minimized at 0.5
  // with value 0.5; summed over the two expectation terms the floor is 1.
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> dx(1 + rng.below(5)), dy(1 + rng.below(5));
    for (double& v : dx) v = rng.uniform(0.0, 1.0);
    for (double& v : dy) v = rng.uniform(0.0, 1.0);
    AdversarialLosses l = adversarial_losses(dx, dy);
    CHECK(l.discriminator + l.encoders >= 1.0 - 1e-12);
  }
}

TEST_CASE("total losses: zero terms, unit terms, linear scaling") {
  LossTerms zero;
  LossWeights w;
  CHECK(total_loss_xnet(zero, w) == 0.0);
  CHECK(total_loss_acenet(zero, w) == 0.0);

  LossTerms unit;
  unit.adversarial_d = 1.0;
  unit.adversarial_z = 1.0;
  unit.reconstruction = 1.0;
  unit.cycle = 1.0;
  unit.translation = 1.0;
  unit.weight_norm = 7.0;
  // 1*(1+1) + 0.2 + 2 + 3 + 0.001*||theta||^2
  CHECK(total_loss_acenet(unit, w) == doctest::Approx(7.2 + 0.001 * 7.0));

  // Doubling w_alpha doubles the translation contribution.
  LossWeights w2 = w;
  w2.w_alpha *= 2.0;
  CHECK(total_loss_xnet(unit, w2) - total_loss_xnet(unit, w) ==
        doctest::Approx(w.w_alpha * unit.translation));
}

TEST_CASE("weighted translation loss with unit weights equals the cycle form") {
  Rng rng(7);
  Tensor x = random_tensor(4, 4, 2, rng);
  Tensor x_hat = random_tensor(4, 4, 2, rng);
  Tensor y = random_tensor(4, 4, 3, rng);
  Tensor y_hat = random_tensor(4, 4, 3, rng);
  PixelWeights<double> ones(16, 1.0);
  CHECK(translation_loss(x, x_hat, y, y_hat, ones) ==
        doctest::Approx(cycle_loss(x, x_hat, y, y_hat)));
}

TEST_CASE("pi_from_alpha is the decreasing map 1 - alpha") {
  std::vector<double> alpha = {0.0, 0.25, 1.0};
  PixelWeights<double> pi = pi_from_alpha(alpha);
  CHECK(pi[0] == 1.0);
  CHECK(pi[1] == 0.75);
  CHECK(pi[2] == 0.0);
}

TEST_CASE("weighted_l2 gradient matches finite differences") {
  Rng rng(8);
  Tensor a = random_tensor(3, 4, 2, rng);
  Tensor b = random_tensor(3, 4, 2, rng);
  PixelWeights<double> wts = random_weights(3, 4, rng);

  Tensor d_a = nn::zeros_like(a);
  weighted_l2_backward(a, b, wts, 1.0, d_a);
  auto loss = [&]() { return weighted_l2(a, b, wts); };
  const auto res = nn::check_gradients(loss, a.v.data(), d_a.v.data(), a.v.size());
  CHECK(res.max_rel_error <= 1e-4);

  // Gradient with respect to b is the negation.
  Tensor d_b = nn::zeros_like(b);
  weighted_l2_backward(b, a, wts, -1.0, d_b);  // -d/db ||b-a|| = d/db of the (a,b) loss negated
  auto loss_b = [&]() { return weighted_l2(a, b, wts); };
  for (std::size_t i = 0; i < d_b.v.size(); ++i) d_b.v[i] = -d_b.v[i];
  const auto res_b = nn::check_gradients(loss_b, b.v.data(), d_b.v.data(), b.v.size());
  CHECK(res_b.max_rel_error <= 1e-4);
}

TEST_CASE("adversarial loss gradients match finite differences") {
  Rng rng(9);
  std::vector<double> dx(4), dy(3);
  for (double& v : dx) v = rng.uniform(0.05, 0.95);
  for (double& v : dy) v = rng.uniform(0.05, 0.95);

  // d L_D / d dx_i = 2 (dx_i - 1) / n ; d L_Z / d dx_i = 2 dx_i / n.
  auto loss_d = [&]() { return adversarial_losses(dx, dy).discriminator; };
  auto loss_z = [&]() { return adversarial_losses(dx, dy).encoders; };
  std::vector<double> gd(dx.size()), gz(dx.size());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    gd[i] = 2.0 * (dx[i] - 1.0) / dx.size();
    gz[i] = 2.0 * dx[i] / dx.size();
  }
  CHECK(nn::check_gradients(loss_d, dx.data(), gd.data(), dx.size()).max_rel_error <= 1e-4);
  CHECK(nn::check_gradients(loss_z, dx.data(), gz.data(), dx.size()).max_rel_error <= 1e-4);
}
