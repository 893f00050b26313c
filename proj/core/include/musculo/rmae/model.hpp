#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "musculo/nn/network.hpp"
#include "musculo/rmae/sensor.hpp"

namespace musculo {

/// Bottleneck value of the autoencoder, dimension D + M.
struct LatentState {
  Vector z;
  bool operator==(const LatentState&) const = default;
};

/// Masked intersensory autoencoder over (theta, f, l).
///
/// The stack (D+2M+3, 200, 30, D+M, 30, 200, D+2M) is stored as two chained
/// networks split at the D+M bottleneck so that control and estimation can
/// back-propagate through the decoder alone. Every layer is tanh except the
/// final decoder layer. Inputs and outputs live in network units (see
/// Scaling); the encode/decode wrappers convert from and to physical units.
class RmaeModel {
 public:
  static constexpr int kWideUnits = 200;
  static constexpr int kNarrowUnits = 30;

  /// Freshly initialized model with the standard layer widths.
  static RmaeModel create(int joints, int muscles, std::uint64_t seed, Scaling scaling = {});

  /// Wraps externally built networks. Only the outer dimensions are checked,
  /// so tests can plug in small stubs.
  RmaeModel(nn::Network encoder, nn::Network decoder, int joints, int muscles,
            Scaling scaling = {});

  int joints() const { return joints_; }
  int muscles() const { return muscles_; }
  int latent_dim() const { return joints_ + muscles_; }
  int input_dim() const { return joints_ + 2 * muscles_ + 3; }
  int output_dim() const { return joints_ + 2 * muscles_; }
  const Scaling& scaling() const { return scaling_; }

  const nn::Network& encoder() const { return encoder_; }
  const nn::Network& decoder() const { return decoder_; }
  nn::Network& encoder() { return encoder_; }
  nn::Network& decoder() { return decoder_; }

  /// Encoder input [theta or 0; f or 0; l or 0; mask] from a network-unit triple.
  Vector assemble_input(const SensorTriple& scaled, MaskMode mode) const;

  /// Encode a physical-unit triple; the masked channel is ignored.
  LatentState encode(const SensorTriple& triple, MaskMode mode) const;
  LatentState encode_scaled(const SensorTriple& scaled, MaskMode mode) const;

  /// Decode to physical units.
  SensorTriple decode(const LatentState& z) const;
  /// Decode to network units.
  SensorTriple decode_scaled(const LatentState& z) const;

  Vector decode_theta(const LatentState& z) const { return decode(z).theta; }
  Vector decode_tension(const LatentState& z) const { return decode(z).tension; }
  Vector decode_length(const LatentState& z) const { return decode(z).length; }

  /// Full pass decode(encode(triple, mode)) in physical units.
  SensorTriple reconstruct(const SensorTriple& triple, MaskMode mode) const;

  /// Batched network-unit forward over assembled inputs (one per column).
  Matrix reconstruct_batch(const Matrix& inputs) const;

  std::size_t parameter_count() const;
  double parameter_norm() const;

  /// FNV-1a hash over D, M, scaling and every parameter bit pattern.
  std::uint64_t checksum() const;

  bool operator==(const RmaeModel& other) const;

 private:
  void check_triple(const SensorTriple& t, bool check_length) const;

  nn::Network encoder_;
  nn::Network decoder_;
  int joints_ = 0;
  int muscles_ = 0;
  Scaling scaling_;
};

/// Checkpoint layout (little-endian): magic "MSCLRMAE", u32 version,
/// u32 D, u32 M, f64 tension scale, f64 length scale, then the encoder and
/// decoder in the network parameter format.
void write_model(std::ostream& os, const RmaeModel& model);
RmaeModel read_model(std::istream& is);
void save_model(const std::filesystem::path& path, const RmaeModel& model);
RmaeModel load_model(const std::filesystem::path& path);

}  // namespace musculo
