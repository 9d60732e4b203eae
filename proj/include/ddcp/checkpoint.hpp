#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ddcp/params.hpp"

namespace ddcp {

// DDCK checkpoint format, little-endian:
//   "DDCK" | u32 version=1 | u32 header_length | header (JSON text,
//   header_length bytes) | named f32 blocks in header order.
//
// The header carries architecture dims, grid, training metadata, and the
// tensor table [{name, shape}] that fixes the block order. Writers must put
// a "model_type" tag in the header so loaders can dispatch.

void save_ddck(const std::string& path, nlohmann::json header, const ParameterSet& params);

// Returns the header; params is rebuilt from the tensor table.
nlohmann::json load_ddck(const std::string& path, ParameterSet& params);

}  // namespace ddcp
