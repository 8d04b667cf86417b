#pragma once

#include <filesystem>
#include <string>

#include "longichange/volume.hpp"

namespace lc {

/// Native volume format: `<path>` holds the raw little-endian float32 voxel
/// stream (first axis fastest) and `<path>.json` is a sidecar with shape,
/// spacing, dtype_role and subject_id. Round-trips bit-exactly.
void save_volume(const Volume& v, const std::filesystem::path& path,
                 const std::string& subject_id = "");

Volume load_volume(const std::filesystem::path& path, std::string* subject_id = nullptr);

/// Minimal single-file NIfTI-1 (.nii) import. Supports float32 / int16 /
/// uint8 voxel data, dim/pixdim geometry and byte-swapped files; everything
/// else in the header is ignored.
Volume load_nifti(const std::filesystem::path& path, DtypeRole role = DtypeRole::intensity);

}  // namespace lc
