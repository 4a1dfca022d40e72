#pragma once

#include <filesystem>
#include <string>

#include "risnoma/neural/param.hpp"

namespace risnoma::nn {

/// JSON checkpoint layout:
///   {"format": "risnoma.checkpoint", "version": 1,
///    "meta": {...},
///    "tensors": [{"name": ..., "rows": r, "cols": c, "values": [row-major]}]}
/// Doubles are written with 17 significant digits so a round trip is exact.
inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_string(const ParamList& params, const std::string& meta_json = "{}");
void load_checkpoint_string(const std::string& text, const ParamList& params);

void save_checkpoint(const std::filesystem::path& path, const ParamList& params, const std::string& meta_json = "{}");
/// Loads by name; every tensor in `params` must be present with a matching
/// shape. Missing file or malformed content throws ConfigError.
void load_checkpoint(const std::filesystem::path& path, const ParamList& params);

}  // namespace risnoma::nn
