#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "oel/errors.hpp"
#include "oel/nn/network.hpp"

namespace oel::nn {

// Binary network checkpoint, little-endian:
//   magic "OELNET\0\0" | u32 version | u8 sizeof(Scalar) | u64 seed | u32 layer count
//   per layer: u8 kind | u8 activation | u8 noise kind | u32 in | u32 out
//   per parameter (layer order, then weight, bias, sigma_w, sigma_b):
//     u32 rows | u32 cols | rows*cols raw scalars (column-major)
// Values are written verbatim, so a load reproduces every bit.
inline constexpr char kCheckpointMagic[8] = {'O', 'E', 'L', 'N', 'E', 'T', '\0', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian");

namespace detail {

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ConfigError("checkpoint truncated");
  return value;
}

}  // namespace detail

template <typename Scalar>
void save_checkpoint(std::ostream& os, const Network<Scalar>& net, std::uint64_t seed) {
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod<std::uint32_t>(os, kCheckpointVersion);
  detail::write_pod<std::uint8_t>(os, sizeof(Scalar));
  detail::write_pod<std::uint64_t>(os, seed);
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    detail::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(layer.kind()));
    detail::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(layer.activation()));
    detail::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(layer.noise_kind()));
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(layer.input_dim()));
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(layer.output_dim()));
  }
  for (const auto* p : net.params()) {
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(p->values.rows()));
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(p->values.cols()));
    os.write(reinterpret_cast<const char*>(p->values.data()),
             static_cast<std::streamsize>(p->values.size() * sizeof(Scalar)));
  }
  if (!os) throw ConfigError("checkpoint write failed");
}

template <typename Scalar>
struct LoadedCheckpoint {
  Network<Scalar> net;
  std::uint64_t seed = 0;
};

template <typename Scalar>
LoadedCheckpoint<Scalar> load_checkpoint(std::istream& is) {
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw ConfigError("not a network checkpoint (bad magic)");
  const auto version = detail::read_pod<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  const auto scalar_size = detail::read_pod<std::uint8_t>(is);
  if (scalar_size != sizeof(Scalar))
    throw ConfigError("checkpoint scalar size " + std::to_string(scalar_size) + " does not match");
  LoadedCheckpoint<Scalar> out;
  out.seed = detail::read_pod<std::uint64_t>(is);
  const auto n_layers = detail::read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto kind = static_cast<LayerKind>(detail::read_pod<std::uint8_t>(is));
    const auto act = static_cast<Activation>(detail::read_pod<std::uint8_t>(is));
    const auto noise = static_cast<NoiseKind>(detail::read_pod<std::uint8_t>(is));
    const auto in = detail::read_pod<std::uint32_t>(is);
    const auto out_dim = detail::read_pod<std::uint32_t>(is);
    out.net.add(Layer<Scalar>::with_shape(kind, in, out_dim, act, noise));
  }
  for (auto* p : out.net.params()) {
    const auto rows = detail::read_pod<std::uint32_t>(is);
    const auto cols = detail::read_pod<std::uint32_t>(is);
    if (rows != p->values.rows() || cols != p->values.cols())
      throw ConfigError("checkpoint shape manifest disagrees with parameter " + p->name);
    is.read(reinterpret_cast<char*>(p->values.data()),
            static_cast<std::streamsize>(p->values.size() * sizeof(Scalar)));
    if (!is) throw ConfigError("checkpoint truncated in parameter " + p->name);
  }
  return out;
}

template <typename Scalar>
void save_checkpoint_file(const std::string& path, const Network<Scalar>& net, std::uint64_t seed) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");
  save_checkpoint(os, net, seed);
}

template <typename Scalar>
LoadedCheckpoint<Scalar> load_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path);
  return load_checkpoint<Scalar>(is);
}

}  // namespace oel::nn
