#include "longichange/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "longichange/stats.hpp"

namespace lc {

const char* to_string(DtypeRole role) {
  switch (role) {
    case DtypeRole::intensity: return "intensity";
    case DtypeRole::probability: return "probability";
    case DtypeRole::binary_mask: return "binary_mask";
    case DtypeRole::label_map: return "label_map";
  }
  return "unknown";
}

DtypeRole dtype_role_from_string(const std::string& s) {
  if (s == "intensity") return DtypeRole::intensity;
  if (s == "probability") return DtypeRole::probability;
  if (s == "binary_mask") return DtypeRole::binary_mask;
  if (s == "label_map") return DtypeRole::label_map;
  throw std::invalid_argument("unknown dtype_role: " + s);
}

static void check_geometry(const Volume::Shape& shape, const Volume::Spacing& spacing) {
  for (int a = 0; a < 3; ++a) {
    if (shape[static_cast<std::size_t>(a)] < 1)
      throw std::invalid_argument("Volume: every axis must have extent >= 1");
    if (!(spacing[static_cast<std::size_t>(a)] > 0.0))
      throw std::invalid_argument("Volume: spacing must be positive");
  }
}

Volume::Volume(Shape shape, Spacing spacing, DtypeRole role, float fill)
    : shape_(shape), spacing_(spacing), role_(role) {
  check_geometry(shape_, spacing_);
  data_.assign(static_cast<std::size_t>(numel()), fill);
  validate();
}

Volume::Volume(Shape shape, Spacing spacing, DtypeRole role, std::vector<float> data)
    : shape_(shape), spacing_(spacing), role_(role), data_(std::move(data)) {
  check_geometry(shape_, spacing_);
  if (static_cast<std::int64_t>(data_.size()) != numel())
    throw std::invalid_argument("Volume: data size does not match shape");
  validate();
}

std::int64_t Volume::numel() const { return shape_[0] * shape_[1] * shape_[2]; }

bool Volume::same_grid(const Volume& other) const {
  return shape_ == other.shape_ && spacing_ == other.spacing_;
}

void Volume::validate() const {
  switch (role_) {
    case DtypeRole::intensity:
      for (float v : data_)
        if (!std::isfinite(v)) throw std::invalid_argument("intensity volume has non-finite values");
      break;
    case DtypeRole::probability:
      for (float v : data_)
        if (!(v >= 0.0f && v <= 1.0f))
          throw std::invalid_argument("probability volume has values outside [0,1]");
      break;
    case DtypeRole::binary_mask:
      for (float v : data_)
        if (v != 0.0f && v != 1.0f)
          throw std::invalid_argument("binary_mask volume has values outside {0,1}");
      break;
    case DtypeRole::label_map:
      for (float v : data_)
        if (v < 0.0f || v != std::floor(v))
          throw std::invalid_argument("label_map volume has non-integer or negative values");
      break;
  }
}

void ScanPair::validate() const {
  if (!baseline.same_grid(followup))
    throw std::invalid_argument("ScanPair: baseline and followup must share shape and spacing");
  if (label == PairLabel::change) {
    if (!change_mask) throw std::invalid_argument("ScanPair: Change pair requires a change_mask");
    if (change_mask->shape() != baseline.shape())
      throw std::invalid_argument("ScanPair: change_mask shape mismatch");
  } else if (change_mask) {
    throw std::invalid_argument("ScanPair: NoChange pair must not carry a change_mask");
  }
}

Volume normalize_intensity(const Volume& v, double p_low, double p_high, bool foreground_only) {
  if (v.role() != DtypeRole::intensity)
    throw std::invalid_argument("normalize_intensity: expects an intensity volume");
  if (!(p_low < p_high))
    throw std::invalid_argument("normalize_intensity: p_low must be < p_high");

  std::vector<double> pool;
  pool.reserve(v.data().size());
  for (float x : v.data())
    if (!foreground_only || x != 0.0f) pool.push_back(static_cast<double>(x));
  if (pool.empty())
    throw std::invalid_argument("normalize_intensity: no foreground voxels");
  std::sort(pool.begin(), pool.end());
  const double q_low = percentile_sorted(pool, p_low);
  const double q_high = percentile_sorted(pool, p_high);
  if (q_high == q_low)
    throw std::invalid_argument("normalize_intensity: degenerate intensity range");

  const double scale = 1.0 / (q_high - q_low);
  std::vector<float> out(v.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = (static_cast<double>(v.data()[i]) - q_low) * scale;
    out[i] = static_cast<float>(std::clamp(t, 0.0, 1.0));
  }
  return Volume(v.shape(), v.spacing(), DtypeRole::intensity, std::move(out));
}

Volume resample_isotropic(const Volume& v, double target_mm) {
  if (!(target_mm > 0.0)) throw std::invalid_argument("resample_isotropic: target_mm must be > 0");
  if (v.spacing() == Volume::Spacing{target_mm, target_mm, target_mm}) return v;

  Volume::Shape out_shape;
  for (int a = 0; a < 3; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    out_shape[sa] = std::max<std::int64_t>(
        1, std::llround(static_cast<double>(v.shape()[sa]) * v.spacing()[sa] / target_mm));
  }
  // Output voxel i sits at physical i*target_mm; map back into input index space.
  const double step[3] = {target_mm / v.spacing()[0], target_mm / v.spacing()[1],
                          target_mm / v.spacing()[2]};
  const bool nearest = v.role() == DtypeRole::binary_mask || v.role() == DtypeRole::label_map;

  Volume out(out_shape, {target_mm, target_mm, target_mm}, v.role());
  const auto clampi = [](std::int64_t x, std::int64_t n) {
    return std::clamp<std::int64_t>(x, 0, n - 1);
  };
  for (std::int64_t k = 0; k < out_shape[2]; ++k) {
    const double pz = static_cast<double>(k) * step[2];
    for (std::int64_t j = 0; j < out_shape[1]; ++j) {
      const double py = static_cast<double>(j) * step[1];
      for (std::int64_t i = 0; i < out_shape[0]; ++i) {
        const double px = static_cast<double>(i) * step[0];
        if (nearest) {
          const std::int64_t ni = clampi(std::llround(px), v.dim(0));
          const std::int64_t nj = clampi(std::llround(py), v.dim(1));
          const std::int64_t nk = clampi(std::llround(pz), v.dim(2));
          out.at(i, j, k) = v.at(ni, nj, nk);
        } else {
          const std::int64_t x0 = clampi(static_cast<std::int64_t>(std::floor(px)), v.dim(0));
          const std::int64_t y0 = clampi(static_cast<std::int64_t>(std::floor(py)), v.dim(1));
          const std::int64_t z0 = clampi(static_cast<std::int64_t>(std::floor(pz)), v.dim(2));
          const std::int64_t x1 = clampi(x0 + 1, v.dim(0));
          const std::int64_t y1 = clampi(y0 + 1, v.dim(1));
          const std::int64_t z1 = clampi(z0 + 1, v.dim(2));
          const double fx = px - static_cast<double>(x0);
          const double fy = py - static_cast<double>(y0);
          const double fz = pz - static_cast<double>(z0);
          const double c00 = v.at(x0, y0, z0) * (1 - fx) + v.at(x1, y0, z0) * fx;
          const double c10 = v.at(x0, y1, z0) * (1 - fx) + v.at(x1, y1, z0) * fx;
          const double c01 = v.at(x0, y0, z1) * (1 - fx) + v.at(x1, y0, z1) * fx;
          const double c11 = v.at(x0, y1, z1) * (1 - fx) + v.at(x1, y1, z1) * fx;
          const double c0 = c00 * (1 - fy) + c10 * fy;
          const double c1 = c01 * (1 - fy) + c11 * fy;
          out.at(i, j, k) = static_cast<float>(c0 * (1 - fz) + c1 * fz);
        }
      }
    }
  }
  out.validate();
  return out;
}

Volume abs_difference(const Volume& a, const Volume& b) {
  if (!a.same_grid(b)) throw std::invalid_argument("abs_difference: shape/spacing mismatch");
  std::vector<float> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(a.data()[i] - b.data()[i]);
  return Volume(a.shape(), a.spacing(), DtypeRole::intensity, std::move(out));
}

Volume crop(const Volume& v, const Volume::Shape& origin, const Volume::Shape& crop_shape) {
  for (int a = 0; a < 3; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    if (origin[sa] < 0 || crop_shape[sa] < 1 || origin[sa] + crop_shape[sa] > v.shape()[sa])
      throw std::invalid_argument("crop: window exceeds volume extent");
  }
  Volume out(crop_shape, v.spacing(), v.role());
  for (std::int64_t k = 0; k < crop_shape[2]; ++k)
    for (std::int64_t j = 0; j < crop_shape[1]; ++j)
      for (std::int64_t i = 0; i < crop_shape[0]; ++i)
        out.at(i, j, k) = v.at(origin[0] + i, origin[1] + j, origin[2] + k);
  return out;
}

ScanPair random_crop_pair(const ScanPair& p, const Volume::Shape& crop_shape, Rng& rng) {
  p.validate();
  Volume::Shape origin;
  for (int a = 0; a < 3; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    const std::int64_t slack = p.baseline.shape()[sa] - crop_shape[sa];
    if (slack < 0) throw std::invalid_argument("random_crop_pair: crop larger than volume");
    origin[sa] = slack == 0 ? 0 : static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(slack + 1)));
  }
  ScanPair out;
  out.baseline = crop(p.baseline, origin, crop_shape);
  out.followup = crop(p.followup, origin, crop_shape);
  out.subject_id = p.subject_id;
  out.label = p.label;
  if (p.change_mask) out.change_mask = crop(*p.change_mask, origin, crop_shape);
  return out;
}

Volume pad_symmetric(const Volume& v, const Volume::Shape& pad_lo, const Volume::Shape& pad_hi) {
  for (int a = 0; a < 3; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    if (pad_lo[sa] < 0 || pad_hi[sa] < 0)
      throw std::invalid_argument("pad_symmetric: negative padding");
    if (pad_lo[sa] > v.shape()[sa] || pad_hi[sa] > v.shape()[sa])
      throw std::invalid_argument("pad_symmetric: padding exceeds source extent");
  }
  const Volume::Shape out_shape = {v.dim(0) + pad_lo[0] + pad_hi[0],
                                   v.dim(1) + pad_lo[1] + pad_hi[1],
                                   v.dim(2) + pad_lo[2] + pad_hi[2]};
  // mirror(-1) == 0 and mirror(n) == n-1: the edge sample is repeated.
  const auto mirror = [](std::int64_t x, std::int64_t n) {
    if (x < 0) return -x - 1;
    if (x >= n) return 2 * n - 1 - x;
    return x;
  };
  Volume out(out_shape, v.spacing(), v.role());
  for (std::int64_t k = 0; k < out_shape[2]; ++k)
    for (std::int64_t j = 0; j < out_shape[1]; ++j)
      for (std::int64_t i = 0; i < out_shape[0]; ++i)
        out.at(i, j, k) = v.at(mirror(i - pad_lo[0], v.dim(0)), mirror(j - pad_lo[1], v.dim(1)),
                               mirror(k - pad_lo[2], v.dim(2)));
  return out;
}

}  // namespace lc
