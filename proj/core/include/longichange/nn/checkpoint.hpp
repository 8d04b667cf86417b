#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include <json.hpp>

#include "longichange/nn/tensor.hpp"

namespace lc::nn {

/// Versioned binary container: a JSON config echo followed by named float64
/// weight arrays. Save/load round-trips bit-exactly.
struct Checkpoint {
  nlohmann::json config;
  std::vector<std::pair<std::string, Tensor>> arrays;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lc::nn
