#include "musculo/rmae/model.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "musculo/nn/serialize.hpp"

namespace musculo {

RmaeModel RmaeModel::create(int joints, int muscles, std::uint64_t seed, Scaling scaling) {
  if (joints <= 0 || muscles <= 0) {
    throw std::invalid_argument("RmaeModel::create: joints and muscles must be positive");
  }
  using nn::Activation;
  const int in = joints + 2 * muscles + 3;
  const int latent = joints + muscles;
  const int out = joints + 2 * muscles;
  const std::vector<nn::LayerSpec> enc = {
      {in, kWideUnits, Activation::Tanh},
      {kWideUnits, kNarrowUnits, Activation::Tanh},
      {kNarrowUnits, latent, Activation::Tanh},
  };
  const std::vector<nn::LayerSpec> dec = {
      {latent, kNarrowUnits, Activation::Tanh},
      {kNarrowUnits, kWideUnits, Activation::Tanh},
      {kWideUnits, out, Activation::Identity},
  };
  // decoder seed is decorrelated from the encoder seed
  return RmaeModel(nn::init_network(enc, seed), nn::init_network(dec, seed ^ 0x9e3779b97f4a7c15ULL),
                   joints, muscles, scaling);
}

RmaeModel::RmaeModel(nn::Network encoder, nn::Network decoder, int joints, int muscles,
                     Scaling scaling)
    : encoder_(std::move(encoder)),
      decoder_(std::move(decoder)),
      joints_(joints),
      muscles_(muscles),
      scaling_(scaling) {
  if (joints <= 0 || muscles <= 0) throw std::invalid_argument("RmaeModel: bad D/M");
  if (encoder_.in_dim() != input_dim()) {
    throw std::invalid_argument("RmaeModel: encoder input must be D+2M+3");
  }
  if (encoder_.out_dim() != latent_dim() || decoder_.in_dim() != latent_dim()) {
    throw std::invalid_argument("RmaeModel: bottleneck must be D+M");
  }
  if (decoder_.out_dim() != output_dim()) {
    throw std::invalid_argument("RmaeModel: decoder output must be D+2M");
  }
  if (scaling_.tension <= 0 || scaling_.length <= 0) {
    throw std::invalid_argument("RmaeModel: scaling constants must be positive");
  }
}

void RmaeModel::check_triple(const SensorTriple& t, bool check_length) const {
  if (t.theta.size() != joints_ || t.tension.size() != muscles_ ||
      (check_length && t.length.size() != muscles_)) {
    throw std::invalid_argument("sensor triple dimensions do not match the model (D=" +
                                std::to_string(joints_) + ", M=" + std::to_string(muscles_) +
                                ")");
  }
}

Vector RmaeModel::assemble_input(const SensorTriple& scaled, MaskMode mode) const {
  const auto bits = mask_bits(mode);
  Vector x = Vector::Zero(input_dim());
  // masked channels are never read, so they may be empty or hold garbage
  if (bits[0] != 0.0) {
    if (scaled.theta.size() != joints_) throw std::invalid_argument("encode: theta has wrong size");
    x.segment(0, joints_) = scaled.theta;
  }
  if (bits[1] != 0.0) {
    if (scaled.tension.size() != muscles_) {
      throw std::invalid_argument("encode: tension has wrong size");
    }
    x.segment(joints_, muscles_) = scaled.tension;
  }
  if (bits[2] != 0.0) {
    if (scaled.length.size() != muscles_) {
      throw std::invalid_argument("encode: length has wrong size");
    }
    x.segment(joints_ + muscles_, muscles_) = scaled.length;
  }
  x.tail(3) << bits[0], bits[1], bits[2];
  return x;
}

LatentState RmaeModel::encode_scaled(const SensorTriple& scaled, MaskMode mode) const {
  return {nn::evaluate(encoder_, assemble_input(scaled, mode))};
}

LatentState RmaeModel::encode(const SensorTriple& triple, MaskMode mode) const {
  SensorTriple s;
  const auto bits = mask_bits(mode);
  if (bits[0] != 0.0) s.theta = triple.theta;
  if (bits[1] != 0.0) s.tension = triple.tension / scaling_.tension;
  if (bits[2] != 0.0) s.length = triple.length / scaling_.length;
  return encode_scaled(s, mode);
}

SensorTriple RmaeModel::decode_scaled(const LatentState& z) const {
  if (z.z.size() != latent_dim()) {
    throw std::invalid_argument("decode: latent has " + std::to_string(z.z.size()) +
                                " entries, model expects " + std::to_string(latent_dim()));
  }
  return unflatten(nn::evaluate(decoder_, z.z), joints_, muscles_);
}

SensorTriple RmaeModel::decode(const LatentState& z) const {
  return scale(decode_scaled(z), ScaleDirection::FromNetwork, scaling_);
}

SensorTriple RmaeModel::reconstruct(const SensorTriple& triple, MaskMode mode) const {
  return decode(encode(triple, mode));
}

Matrix RmaeModel::reconstruct_batch(const Matrix& inputs) const {
  return nn::evaluate(decoder_, nn::evaluate(encoder_, inputs));
}

std::size_t RmaeModel::parameter_count() const {
  return encoder_.parameter_count() + decoder_.parameter_count();
}

double RmaeModel::parameter_norm() const {
  const double a = encoder_.norm();
  const double b = decoder_.norm();
  return std::sqrt(a * a + b * b);
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  void f64(double v) { bytes(&v, sizeof v); }
  void network(const nn::Network& net) {
    for (const auto& l : net.layers) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) f64(l.weight.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) f64(l.bias.data()[i]);
    }
  }
};

constexpr std::array<char, 8> kModelMagic = {'M', 'S', 'C', 'L', 'R', 'M', 'A', 'E'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

std::uint64_t RmaeModel::checksum() const {
  Fnv1a f;
  f.bytes(&joints_, sizeof joints_);
  f.bytes(&muscles_, sizeof muscles_);
  f.f64(scaling_.tension);
  f.f64(scaling_.length);
  f.network(encoder_);
  f.network(decoder_);
  return f.h;
}

bool RmaeModel::operator==(const RmaeModel& other) const {
  return joints_ == other.joints_ && muscles_ == other.muscles_ && scaling_ == other.scaling_ &&
         encoder_ == other.encoder_ && decoder_ == other.decoder_;
}

void write_model(std::ostream& os, const RmaeModel& model) {
  os.write(kModelMagic.data(), kModelMagic.size());
  nn::io::write_u32(os, kModelVersion);
  nn::io::write_u32(os, static_cast<std::uint32_t>(model.joints()));
  nn::io::write_u32(os, static_cast<std::uint32_t>(model.muscles()));
  nn::io::write_f64(os, model.scaling().tension);
  nn::io::write_f64(os, model.scaling().length);
  nn::write_network(os, model.encoder());
  nn::write_network(os, model.decoder());
}

RmaeModel read_model(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kModelMagic) throw std::runtime_error("not an RMAE checkpoint (bad magic)");
  const auto version = nn::io::read_u32(is);
  if (version != kModelVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto joints = static_cast<int>(nn::io::read_u32(is));
  const auto muscles = static_cast<int>(nn::io::read_u32(is));
  Scaling s;
  s.tension = nn::io::read_f64(is);
  s.length = nn::io::read_f64(is);
  auto enc = nn::read_network(is);
  auto dec = nn::read_network(is);
  return RmaeModel(std::move(enc), std::move(dec), joints, muscles, s);
}

void save_model(const std::filesystem::path& path, const RmaeModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_model(os, model);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

RmaeModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_model(is);
}

}  // namespace musculo
