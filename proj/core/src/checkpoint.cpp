#include "longichange/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lc::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'L', 'C', 'K', 'P', 'T', '0', '0', '1'};

template <typename T>
void write_pod(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  f.write(kMagic, sizeof(kMagic));
  const std::string cfg = ckpt.config.dump();
  write_pod<std::uint64_t>(f, cfg.size());
  f.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, tensor] : ckpt.arrays) {
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(tensor.ndim()));
    for (auto d : tensor.shape()) write_pod<std::int64_t>(f, d);
    f.write(reinterpret_cast<const char*>(tensor.data()),
            static_cast<std::streamsize>(tensor.numel() * static_cast<std::int64_t>(sizeof(real))));
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path.string());

  Checkpoint ckpt;
  const auto cfg_len = read_pod<std::uint64_t>(f);
  std::string cfg(cfg_len, '\0');
  f.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
  if (!f) throw std::runtime_error("load_checkpoint: truncated config");
  ckpt.config = nlohmann::json::parse(cfg);

  const auto count = read_pod<std::uint32_t>(f);
  ckpt.arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const auto ndim = read_pod<std::uint32_t>(f);
    std::vector<std::int64_t> shape(ndim);
    for (auto& d : shape) d = read_pod<std::int64_t>(f);
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.numel() * static_cast<std::int64_t>(sizeof(real))));
    if (!f) throw std::runtime_error("load_checkpoint: truncated array " + name);
    ckpt.arrays.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

}  // namespace lc::nn
