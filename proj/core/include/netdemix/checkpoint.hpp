#pragma once

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "netdemix/model.hpp"

namespace netdemix {

inline constexpr int kCheckpointFormatVersion = 1;

/// Writes `params.bin` (name -> shape + little-endian float32 payload for
/// every parameter and buffer) and `manifest.json` into `dir`. `extra` is
/// merged into the manifest. Returns the manifest written.
nlohmann::json save_checkpoint(const Model& model, const std::filesystem::path& dir,
                               const nlohmann::json& extra = nlohmann::json::object());

/// Rebuilds the model described by `dir/manifest.json` and loads its arrays.
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& dir);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace netdemix
