#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "ptnlab/param_store.hpp"

namespace ptnlab {

/// Checkpoint layout: one line of JSON (format version, entry names, shapes,
/// frozen flags, optional meta object), a newline, then the raw little-endian
/// 64-bit floats of every entry in header order.
void save_checkpoint(const ParameterStore& params,
                     const std::filesystem::path& path,
                     const nlohmann::json& meta = nlohmann::json::object());

ParameterStore load_checkpoint(const std::filesystem::path& path,
                               nlohmann::json* meta_out = nullptr);

}  // namespace ptnlab
