#include "hetcd/translators.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hetcd/change_extraction.hpp"
#include "hetcd/error.hpp"
#include "hetcd/nn/init.hpp"
#include "hetcd/tensor_bridge.hpp"

namespace hetcd {

namespace {

constexpr int kCodeChannels = 20;
constexpr char kModelMagic[4] = {'H', 'C', 'D', 'M'};
constexpr uint32_t kModelVersion = 1;

nn::ConvNet<float> translator_net(int in_channels, int out_channels, Rng& rng) {
  nn::ConvNet<float> net;
  net.layers.emplace_back(in_channels, 100, nn::Activation::leaky_relu);
  net.layers.emplace_back(100, 50, nn::Activation::leaky_relu);
  net.layers.emplace_back(50, 20, nn::Activation::leaky_relu);
  net.layers.emplace_back(20, out_channels, nn::Activation::tanh);
  for (auto& l : net.layers) nn::glorot_truncated_init(l, rng);
  return net;
}

nn::ConvNet<float> encoder_net(int in_channels, Rng& rng) {
  nn::ConvNet<float> net;
  net.layers.emplace_back(in_channels, 100, nn::Activation::leaky_relu);
  net.layers.emplace_back(100, 50, nn::Activation::leaky_relu);
  net.layers.emplace_back(50, kCodeChannels, nn::Activation::tanh);  // code stays in (-1, 1)
  for (auto& l : net.layers) nn::glorot_truncated_init(l, rng);
  return net;
}

nn::ConvNet<float> decoder_net(int out_channels, Rng& rng) {
  // Encoder filter counts reversed, then the channel-matching tanh output.
  nn::ConvNet<float> net;
  net.layers.emplace_back(kCodeChannels, 20, nn::Activation::leaky_relu);
  net.layers.emplace_back(20, 50, nn::Activation::leaky_relu);
  net.layers.emplace_back(50, 100, nn::Activation::leaky_relu);
  net.layers.emplace_back(100, out_channels, nn::Activation::tanh);
  for (auto& l : net.layers) nn::glorot_truncated_init(l, rng);
  return net;
}

void put_u32le(uint32_t v, std::string& out) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void write_model_file(ModelKind kind, int cx, int cy, std::vector<nn::ParamBlock<float>>& blocks,
                      const std::string& path) {
  std::string bytes;
  bytes.append(kModelMagic, 4);
  put_u32le(kModelVersion, bytes);
  put_u32le(kind == ModelKind::xnet ? 1u : 2u, bytes);
  put_u32le(static_cast<uint32_t>(cx), bytes);
  put_u32le(static_cast<uint32_t>(cy), bytes);
  put_u32le(static_cast<uint32_t>(blocks.size()), bytes);
  for (const auto& b : blocks) {
    put_u32le(static_cast<uint32_t>(b.n), bytes);
    for (std::size_t i = 0; i < b.n; ++i) put_u32le(std::bit_cast<uint32_t>(b.data[i]), bytes);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path + ": write failed");
}

struct ModelHeader {
  ModelKind kind;
  int channels_x;
  int channels_y;
  uint32_t n_blocks;
  std::string bytes;
  std::size_t payload_pos;
};

ModelHeader read_model_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  ModelHeader h;
  h.bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (h.bytes.size() < 24) throw IoError(path + ": truncated model header");
  const unsigned char* p = reinterpret_cast<const unsigned char*>(h.bytes.data());
  if (std::memcmp(p, kModelMagic, 4) != 0) throw IoError(path + ": bad magic, expected \"HCDM\"");
  if (get_u32le(p + 4) != kModelVersion) throw IoError(path + ": unsupported model version");
  const uint32_t kind = get_u32le(p + 8);
  if (kind != 1 && kind != 2) throw IoError(path + ": unknown architecture id");
  h.kind = kind == 1 ? ModelKind::xnet : ModelKind::acenet;
  h.channels_x = static_cast<int>(get_u32le(p + 12));
  h.channels_y = static_cast<int>(get_u32le(p + 16));
  h.n_blocks = get_u32le(p + 20);
  h.payload_pos = 24;
  return h;
}

void read_blocks(const ModelHeader& h, std::vector<nn::ParamBlock<float>>& blocks,
                 const std::string& path) {
  if (h.n_blocks != blocks.size()) throw IoError(path + ": parameter block count mismatch");
  const unsigned char* p = reinterpret_cast<const unsigned char*>(h.bytes.data());
  std::size_t pos = h.payload_pos;
  for (auto& b : blocks) {
    if (pos + 4 > h.bytes.size()) throw IoError(path + ": truncated model payload");
    const uint32_t len = get_u32le(p + pos);
    pos += 4;
    if (len != b.n) throw IoError(path + ": parameter block length mismatch");
    if (pos + 4 * static_cast<std::size_t>(len) > h.bytes.size()) {
      throw IoError(path + ": truncated model payload");
    }
    for (uint32_t i = 0; i < len; ++i) {
      b.data[i] = std::bit_cast<float>(get_u32le(p + pos));
      pos += 4;
    }
  }
}

}  // namespace

XNetModel make_xnet(int channels_x, int channels_y, uint64_t init_seed) {
  if (channels_x < 1 || channels_y < 1) throw ConfigError("make_xnet: invalid channel counts");
  Rng rng = Rng::stream(init_seed, 0x11);
  XNetModel m;
  m.channels_x = channels_x;
  m.channels_y = channels_y;
  m.f = translator_net(channels_x, channels_y, rng);
  m.g = translator_net(channels_y, channels_x, rng);
  return m;
}

ACENetModel make_acenet(int channels_x, int channels_y, uint64_t init_seed) {
  if (channels_x < 1 || channels_y < 1) throw ConfigError("make_acenet: invalid channel counts");
  Rng rng = Rng::stream(init_seed, 0x12);
  ACENetModel m;
  m.channels_x = channels_x;
  m.channels_y = channels_y;
  m.enc_x = encoder_net(channels_x, rng);
  m.enc_y = encoder_net(channels_y, rng);
  m.dec_x = decoder_net(channels_x, rng);
  m.dec_y = decoder_net(channels_y, rng);
  m.discr.convs.layers.emplace_back(kCodeChannels, 64, nn::Activation::leaky_relu);
  m.discr.convs.layers.emplace_back(64, 32, nn::Activation::leaky_relu);
  m.discr.convs.layers.emplace_back(32, 16, nn::Activation::leaky_relu);
  for (auto& l : m.discr.convs.layers) nn::glorot_truncated_init(l, rng);
  m.discr.head = nn::DenseLayer<float>(16, nn::Activation::sigmoid);
  nn::glorot_truncated_init(m.discr.head, rng);
  return m;
}

AblationVariant ablation_from_string(const std::string& name) {
  if (name == "proposed") return AblationVariant::proposed;
  if (name == "no_alpha") return AblationVariant::no_alpha;
  if (name == "no_cycle") return AblationVariant::no_cycle;
  if (name == "no_milestones") return AblationVariant::no_milestones;
  if (name == "discr_output") return AblationVariant::discr_output;
  if (name == "no_discr") return AblationVariant::no_discr;
  if (name == "no_recon") return AblationVariant::no_recon;
  throw ConfigError("unknown ablation variant: " + name);
}

std::string to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::proposed: return "proposed";
    case AblationVariant::no_alpha: return "no_alpha";
    case AblationVariant::no_cycle: return "no_cycle";
    case AblationVariant::no_milestones: return "no_milestones";
    case AblationVariant::discr_output: return "discr_output";
    case AblationVariant::no_discr: return "no_discr";
    case AblationVariant::no_recon: return "no_recon";
  }
  return "unknown";
}

std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,adversarial_d,adversarial_z,reconstruction,cycle,translation,weight_norm,total\n";
  char buf[256];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch,
                  e.terms.adversarial_d, e.terms.adversarial_z, e.terms.reconstruction,
                  e.terms.cycle, e.terms.translation, e.terms.weight_norm, e.total);
    out += buf;
  }
  return out;
}

Translation translate(const XNetModel& model, const Raster& x, const Raster& y) {
  if (x.channels != model.channels_x || y.channels != model.channels_y) {
    throw ShapeError("translate: channel count differs from the training configuration");
  }
  const nn::Tensor<float> tx = tensor_from_raster(x);
  const nn::Tensor<float> ty = tensor_from_raster(y);
  Translation t;
  const nn::Tensor<float> y_hat = nn::convnet_infer(model.f, tx);
  const nn::Tensor<float> x_hat = nn::convnet_infer(model.g, ty);
  t.y_hat = raster_from_tensor(y_hat);
  t.x_hat = raster_from_tensor(x_hat);
  t.x_cyc = raster_from_tensor(nn::convnet_infer(model.g, y_hat));
  t.y_cyc = raster_from_tensor(nn::convnet_infer(model.f, x_hat));
  return t;
}

Translation translate(const ACENetModel& model, const Raster& x, const Raster& y) {
  if (x.channels != model.channels_x || y.channels != model.channels_y) {
    throw ShapeError("translate: channel count differs from the training configuration");
  }
  const nn::Tensor<float> tx = tensor_from_raster(x);
  const nn::Tensor<float> ty = tensor_from_raster(y);
  Translation t;
  const nn::Tensor<float> zx = nn::convnet_infer(model.enc_x, tx);
  const nn::Tensor<float> zy = nn::convnet_infer(model.enc_y, ty);
  const nn::Tensor<float> y_hat = nn::convnet_infer(model.dec_y, zx);
  const nn::Tensor<float> x_hat = nn::convnet_infer(model.dec_x, zy);
  t.y_hat = raster_from_tensor(y_hat);
  t.x_hat = raster_from_tensor(x_hat);
  t.x_cyc = raster_from_tensor(nn::convnet_infer(model.dec_x, nn::convnet_infer(model.enc_y, y_hat)));
  t.y_cyc = raster_from_tensor(nn::convnet_infer(model.dec_y, nn::convnet_infer(model.enc_x, x_hat)));
  t.x_rec = raster_from_tensor(nn::convnet_infer(model.dec_x, zx));
  t.y_rec = raster_from_tensor(nn::convnet_infer(model.dec_y, zy));
  return t;
}

std::vector<float> difference_from_translation(const Raster& x, const Raster& y,
                                               const Translation& t) {
  const DifferenceImage dx = distance_image(x, t.x_hat);
  const DifferenceImage dy = distance_image(y, t.y_hat);
  DifferenceImage d = combine(dx, dy);
  float lo = d.values[0], hi = d.values[0];
  for (float v : d.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi > lo) {
    const float scale = 1.0f / (hi - lo);
    for (float& v : d.values) v = (v - lo) * scale;
  } else {
    std::fill(d.values.begin(), d.values.end(), 0.0f);
  }
  return d.values;
}

void save_xnet(const XNetModel& model, const std::string& path) {
  XNetModel& m = const_cast<XNetModel&>(model);
  std::vector<nn::ParamBlock<float>> blocks;
  nn::collect_blocks(m.f, blocks);
  nn::collect_blocks(m.g, blocks);
  write_model_file(ModelKind::xnet, model.channels_x, model.channels_y, blocks, path);
}

void save_acenet(const ACENetModel& model, const std::string& path) {
  ACENetModel& m = const_cast<ACENetModel&>(model);
  std::vector<nn::ParamBlock<float>> blocks;
  nn::collect_blocks(m.enc_x, blocks);
  nn::collect_blocks(m.enc_y, blocks);
  nn::collect_blocks(m.dec_x, blocks);
  nn::collect_blocks(m.dec_y, blocks);
  nn::collect_blocks(m.discr, blocks);
  write_model_file(ModelKind::acenet, model.channels_x, model.channels_y, blocks, path);
}

XNetModel load_xnet(const std::string& path) {
  const ModelHeader h = read_model_header(path);
  if (h.kind != ModelKind::xnet) throw IoError(path + ": checkpoint does not hold an X-Net");
  XNetModel m = make_xnet(h.channels_x, h.channels_y, /*init_seed=*/0);
  std::vector<nn::ParamBlock<float>> blocks;
  nn::collect_blocks(m.f, blocks);
  nn::collect_blocks(m.g, blocks);
  read_blocks(h, blocks, path);
  return m;
}

ACENetModel load_acenet(const std::string& path) {
  const ModelHeader h = read_model_header(path);
  if (h.kind != ModelKind::acenet) throw IoError(path + ": checkpoint does not hold an ACE-Net");
  ACENetModel m = make_acenet(h.channels_x, h.channels_y, /*init_seed=*/0);
  std::vector<nn::ParamBlock<float>> blocks;
  nn::collect_blocks(m.enc_x, blocks);
  nn::collect_blocks(m.enc_y, blocks);
  nn::collect_blocks(m.dec_x, blocks);
  nn::collect_blocks(m.dec_y, blocks);
  nn::collect_blocks(m.discr, blocks);
  read_blocks(h, blocks, path);
  return m;
}

ModelKind peek_model_kind(const std::string& path) { return read_model_header(path).kind; }

}  // namespace hetcd
