#include "musculo/nn/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace musculo::nn {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'S', 'C', 'L', 'N', 'N', '\0', '\0'};

static_assert(std::endian::native == std::endian::little,
              "parameter files are little-endian; add byte swapping for this target");

void check_stream(std::istream& is, const char* what) {
  if (!is) throw std::runtime_error(std::string("network file truncated while reading ") + what);
}

}  // namespace

namespace io {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  check_stream(is, "u32");
  return v;
}

double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  check_stream(is, "f64");
  return v;
}

}  // namespace io

void write_network(std::ostream& os, const Network& net) {
  os.write(kMagic.data(), kMagic.size());
  io::write_u32(os, kNetworkFormatVersion);
  io::write_u32(os, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    io::write_u32(os, static_cast<std::uint32_t>(l.in_dim()));
    io::write_u32(os, static_cast<std::uint32_t>(l.out_dim()));
    const auto act = static_cast<char>(l.activation);
    os.write(&act, 1);
    for (int r = 0; r < l.out_dim(); ++r) {
      for (int c = 0; c < l.in_dim(); ++c) io::write_f64(os, l.weight(r, c));
    }
    for (int r = 0; r < l.out_dim(); ++r) io::write_f64(os, l.bias(r));
  }
  if (!os) throw std::runtime_error("failed writing network parameters");
}

Network read_network(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  check_stream(is, "magic");
  if (magic != kMagic) throw std::runtime_error("not a network parameter file (bad magic)");
  const auto version = io::read_u32(is);
  if (version != kNetworkFormatVersion) {
    throw std::runtime_error("unsupported network file version " + std::to_string(version));
  }
  const auto n_layers = io::read_u32(is);
  std::vector<LayerSpec> specs;
  Network net;
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    const auto in = static_cast<int>(io::read_u32(is));
    const auto out = static_cast<int>(io::read_u32(is));
    char act = 0;
    is.read(&act, 1);
    check_stream(is, "activation");
    if (act != static_cast<char>(Activation::Tanh) &&
        act != static_cast<char>(Activation::Identity)) {
      throw std::runtime_error("unknown activation tag in network file");
    }
    specs.push_back({in, out, static_cast<Activation>(act)});
    check_chain(specs);
    Layer layer{Matrix(out, in), Vector(out), static_cast<Activation>(act)};
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weight(r, c) = io::read_f64(is);
    }
    for (int r = 0; r < out; ++r) layer.bias(r) = io::read_f64(is);
    net.layers.push_back(std::move(layer));
  }
  if (!net.all_finite()) throw std::runtime_error("network file contains non-finite values");
  return net;
}

void save_network(const std::filesystem::path& path, const Network& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_network(os, net);
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_network(is);
}

}  // namespace musculo::nn
