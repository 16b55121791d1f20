#include "stempush/nn/checkpoint.hpp"

#include "stempush/strfmt.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace stempush::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'P', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw ValidationError("checkpoint '" + path + "' is truncated");
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, uint64_t config_hash,
                     const std::vector<ParamRef>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put(os, config_hash);
  put(os, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    put(os, static_cast<uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put(os, static_cast<uint32_t>(p.value->shape.size()));
    for (int d : p.value->shape) put(os, static_cast<int32_t>(d));
    os.write(reinterpret_cast<const char*>(p.value->data.data()),
             static_cast<std::streamsize>(p.value->data.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("write failed for checkpoint '" + path + "'");
}

void load_checkpoint(const std::string& path, uint64_t expected_config_hash,
                     const std::vector<ParamRef>& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("'" + path + "' is not a model checkpoint");
  }
  const auto version = take<uint32_t>(is, path);
  if (version != kVersion) {
    throw ValidationError("checkpoint '" + path + "' has unsupported version " +
                          std::to_string(version));
  }
  const auto hash = take<uint64_t>(is, path);
  if (hash != expected_config_hash) {
    throw ValidationError("checkpoint '" + path + "' was trained under config hash " +
                          hex64(hash) + " but the current config hash is " +
                          hex64(expected_config_hash));
  }
  const auto count = take<uint32_t>(is, path);
  if (count != params.size()) {
    throw ValidationError("checkpoint '" + path + "' holds " + std::to_string(count) +
                          " tensors, expected " + std::to_string(params.size()));
  }
  for (const auto& p : params) {
    const auto name_len = take<uint32_t>(is, path);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw ValidationError("checkpoint truncated: " + path);
    if (name != p.name) {
      throw ValidationError("checkpoint '" + path + "': tensor '" + name + "' where '" + p.name +
                            "' was expected");
    }
    const auto ndim = take<uint32_t>(is, path);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = take<int32_t>(is, path);
    if (shape != p.value->shape) {
      throw ValidationError("checkpoint '" + path + "': shape mismatch for '" + name + "'");
    }
    if (!is.read(reinterpret_cast<char*>(p.value->data.data()),
                 static_cast<std::streamsize>(p.value->data.size() * sizeof(double)))) {
      throw ValidationError("checkpoint truncated: " + path);
    }
  }
}

uint64_t checkpoint_config_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("'" + path + "' is not a model checkpoint");
  }
  take<uint32_t>(is, path);
  return take<uint64_t>(is, path);
}

}  // namespace stempush::nn
