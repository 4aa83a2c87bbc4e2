#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "foa/model.hpp"

namespace foa {

struct CheckpointInfo {
  long long iteration = 0;
  std::uint64_t seed = 0;
  std::string note;
};

/// Directory with manifest.json (config, layer specs, seed, iteration) and
/// one tensor blob per weight and bias array.
void save_checkpoint(const std::filesystem::path& dir, const MultiBranchModel& model,
                     const CheckpointInfo& info = {});
MultiBranchModel load_checkpoint(const std::filesystem::path& dir,
                                 CheckpointInfo* info = nullptr);

std::string model_config_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace foa
