#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longichange/rng.hpp"

namespace lc {

/// Role of a volume's values; each role carries a value-range invariant that
/// is checked on construction.
enum class DtypeRole { intensity, probability, binary_mask, label_map };

const char* to_string(DtypeRole role);
DtypeRole dtype_role_from_string(const std::string& s);

/// Dense 3D scalar field with voxel spacing in mm. Storage is float32 with
/// the first axis fastest, matching the on-disk voxel stream. Volumes are
/// treated as immutable once handed out; mutate only while building one.
class Volume {
 public:
  using Shape = std::array<std::int64_t, 3>;
  using Spacing = std::array<double, 3>;

  Volume() = default;
  Volume(Shape shape, Spacing spacing, DtypeRole role, float fill = 0.0f);
  Volume(Shape shape, Spacing spacing, DtypeRole role, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  const Spacing& spacing() const { return spacing_; }
  DtypeRole role() const { return role_; }
  std::int64_t dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::int64_t numel() const;

  std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + shape_[0] * (j + shape_[1] * k));
  }
  float at(std::int64_t i, std::int64_t j, std::int64_t k) const { return data_[index(i, j, k)]; }
  float& at(std::int64_t i, std::int64_t j, std::int64_t k) { return data_[index(i, j, k)]; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool same_grid(const Volume& other) const;

  /// Re-checks the role invariant; throws std::invalid_argument on violation.
  void validate() const;

 private:
  Shape shape_{0, 0, 0};
  Spacing spacing_{1.0, 1.0, 1.0};
  DtypeRole role_ = DtypeRole::intensity;
  std::vector<float> data_;
};

enum class PairLabel { no_change, change };

/// Two co-registered scans of one subject. A Change pair carries the
/// ground-truth change mask; a NoChange pair must not.
struct ScanPair {
  Volume baseline;
  Volume followup;
  std::string subject_id;
  std::optional<Volume> change_mask;
  PairLabel label = PairLabel::no_change;

  /// Throws unless shapes/spacings agree and the mask matches the label.
  void validate() const;
};

/// Rescale to [0,1] between the p_low / p_high intensity percentiles, then
/// clamp. With foreground_only (the default) the percentiles are taken over
/// nonzero voxels, which keeps a skull-stripped zero background from
/// collapsing the lower percentile. Throws on a degenerate range.
Volume normalize_intensity(const Volume& v, double p_low = 0.0, double p_high = 99.0,
                           bool foreground_only = true);

/// Resample onto an isotropic grid of `target_mm` voxels: trilinear for
/// intensity/probability volumes, nearest-neighbour for masks and label maps.
/// Output shape is round(shape * spacing / target_mm), at least 1 per axis.
Volume resample_isotropic(const Volume& v, double target_mm);

/// Voxelwise |a - b|. Shapes and spacings must match.
Volume abs_difference(const Volume& a, const Volume& b);

/// Axis-aligned crop. origin + crop_shape must fit inside v.
Volume crop(const Volume& v, const Volume::Shape& origin, const Volume::Shape& crop_shape);

/// Identical crop window (uniformly random origin) applied to both scans and
/// the change mask if present.
ScanPair random_crop_pair(const ScanPair& p, const Volume::Shape& crop_shape, Rng& rng);

/// Symmetric (edge-mirroring) padding, e.g. [a b c] -> [a | a b c | c].
Volume pad_symmetric(const Volume& v, const Volume::Shape& pad_lo, const Volume::Shape& pad_hi);

}  // namespace lc
