#pragma once

// Binary parameter files.
//
// Layout (little-endian):
//   magic    8 bytes  "MSCLNN\0\0"
//   version  u32      kNetworkFormatVersion
//   layers   u32
//   per layer: in_dim u32, out_dim u32, activation u8,
//              weight f64[out_dim * in_dim] row-major, bias f64[out_dim]

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "musculo/nn/network.hpp"

namespace musculo::nn {

inline constexpr std::uint32_t kNetworkFormatVersion = 1;

void write_network(std::ostream& os, const Network& net);
Network read_network(std::istream& is);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

namespace io {
void write_u32(std::ostream& os, std::uint32_t v);
void write_f64(std::ostream& os, double v);
std::uint32_t read_u32(std::istream& is);
double read_f64(std::istream& is);
}  // namespace io

}  // namespace musculo::nn
