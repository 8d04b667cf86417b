#include "longichange/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace lc {

static_assert(std::endian::native == std::endian::little,
              "native volume format assumes a little-endian host");

void save_volume(const Volume& v, const std::filesystem::path& path,
                 const std::string& subject_id) {
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_volume: cannot open " + path.string());
    f.write(reinterpret_cast<const char*>(v.data().data()),
            static_cast<std::streamsize>(v.data().size() * sizeof(float)));
    if (!f) throw std::runtime_error("save_volume: write failed for " + path.string());
  }
  nlohmann::json side;
  side["shape"] = {v.dim(0), v.dim(1), v.dim(2)};
  side["spacing"] = {v.spacing()[0], v.spacing()[1], v.spacing()[2]};
  side["dtype_role"] = to_string(v.role());
  side["subject_id"] = subject_id;
  std::ofstream js(path.string() + ".json");
  if (!js) throw std::runtime_error("save_volume: cannot open sidecar for " + path.string());
  js << side.dump(2) << "\n";
}

Volume load_volume(const std::filesystem::path& path, std::string* subject_id) {
  std::ifstream js(path.string() + ".json");
  if (!js) throw std::runtime_error("load_volume: missing sidecar " + path.string() + ".json");
  nlohmann::json side = nlohmann::json::parse(js);

  Volume::Shape shape{};
  Volume::Spacing spacing{};
  for (int a = 0; a < 3; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    shape[sa] = side.at("shape").at(sa).get<std::int64_t>();
    spacing[sa] = side.at("spacing").at(sa).get<double>();
  }
  const DtypeRole role = dtype_role_from_string(side.at("dtype_role").get<std::string>());
  if (subject_id) *subject_id = side.value("subject_id", std::string());

  const std::int64_t n = shape[0] * shape[1] * shape[2];
  std::vector<float> data(static_cast<std::size_t>(n));
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_volume: cannot open " + path.string());
  f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (f.gcount() != static_cast<std::streamsize>(data.size() * sizeof(float)))
    throw std::runtime_error("load_volume: truncated voxel stream in " + path.string());
  return Volume(shape, spacing, role, std::move(data));
}

namespace {

// The NIfTI-1 fields we consume, at their fixed header offsets.
struct NiftiHeader {
  std::int32_t sizeof_hdr;   // 0
  std::int16_t dim[8];       // 40
  std::int16_t datatype;     // 70
  std::int16_t bitpix;       // 72
  float pixdim[8];           // 76
  float vox_offset;          // 108
  char magic[4];             // 344
};

template <typename T>
T swapped(T v) {
  auto* p = reinterpret_cast<unsigned char*>(&v);
  std::reverse(p, p + sizeof(T));
  return v;
}

template <typename T>
void read_at(const std::vector<char>& buf, std::size_t off, T* out, std::size_t count, bool swap) {
  for (std::size_t i = 0; i < count; ++i) {
    T v;
    std::memcpy(&v, buf.data() + off + i * sizeof(T), sizeof(T));
    out[i] = swap ? swapped(v) : v;
  }
}

}  // namespace

Volume load_nifti(const std::filesystem::path& path, DtypeRole role) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_nifti: cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (raw.size() < 352) throw std::runtime_error("load_nifti: file shorter than a NIfTI-1 header");

  NiftiHeader h{};
  read_at(raw, 0, &h.sizeof_hdr, 1, false);
  const bool swap = h.sizeof_hdr != 348;
  if (swap && swapped(h.sizeof_hdr) != 348)
    throw std::runtime_error("load_nifti: not a NIfTI-1 header (sizeof_hdr != 348)");
  read_at(raw, 40, h.dim, 8, swap);
  read_at(raw, 70, &h.datatype, 1, swap);
  read_at(raw, 72, &h.bitpix, 1, swap);
  read_at(raw, 76, h.pixdim, 8, swap);
  read_at(raw, 108, &h.vox_offset, 1, swap);
  std::memcpy(h.magic, raw.data() + 344, 4);
  if (std::strncmp(h.magic, "n+1", 3) != 0)
    throw std::runtime_error("load_nifti: only single-file (magic \"n+1\") volumes are supported");

  if (h.dim[0] < 3) throw std::runtime_error("load_nifti: volume must be at least 3-D");
  for (int d = 4; d <= h.dim[0]; ++d)
    if (h.dim[d] > 1) throw std::runtime_error("load_nifti: trailing dimensions must be singleton");

  const Volume::Shape shape = {h.dim[1], h.dim[2], h.dim[3]};
  Volume::Spacing spacing;
  for (int a = 0; a < 3; ++a) {
    const float p = h.pixdim[a + 1];
    spacing[static_cast<std::size_t>(a)] = p > 0.0f ? static_cast<double>(p) : 1.0;
  }
  const std::int64_t n = shape[0] * shape[1] * shape[2];
  const auto off = static_cast<std::size_t>(h.vox_offset);

  std::vector<float> data(static_cast<std::size_t>(n));
  switch (h.datatype) {
    case 16: {  // float32
      if (raw.size() < off + static_cast<std::size_t>(n) * 4)
        throw std::runtime_error("load_nifti: truncated voxel data");
      read_at(raw, off, data.data(), static_cast<std::size_t>(n), swap);
      break;
    }
    case 4: {  // int16
      if (raw.size() < off + static_cast<std::size_t>(n) * 2)
        throw std::runtime_error("load_nifti: truncated voxel data");
      std::vector<std::int16_t> tmp(static_cast<std::size_t>(n));
      read_at(raw, off, tmp.data(), tmp.size(), swap);
      for (std::size_t i = 0; i < tmp.size(); ++i) data[i] = static_cast<float>(tmp[i]);
      break;
    }
    case 2: {  // uint8
      if (raw.size() < off + static_cast<std::size_t>(n))
        throw std::runtime_error("load_nifti: truncated voxel data");
      for (std::int64_t i = 0; i < n; ++i)
        data[static_cast<std::size_t>(i)] =
            static_cast<float>(static_cast<unsigned char>(raw[off + static_cast<std::size_t>(i)]));
      break;
    }
    default:
      throw std::runtime_error("load_nifti: unsupported datatype " + std::to_string(h.datatype) +
                               " (need float32, int16 or uint8)");
  }
  return Volume(shape, spacing, role, std::move(data));
}

}  // namespace lc
