// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"

namespace dgsa {

// Checkpoint binary layout (all integers little-endian):
//   8 bytes   magic "DGSACKPT"
//   u32       format version (1)
//   u64       FNV-1a hash of the embedded config text
//   u64       config text length, followed by that many bytes
//   u32       parameter count
//   per parameter, in registry declaration order:
//     u32     name length, name bytes
//     u32     ndim, then u64 extents
//     f32[]   row-major values
// Values are stored as 32-bit floats; loading widens back to double.

std::uint64_t fnv1a64(const std::string& text);

void save_checkpoint(const std::string& path, const LayerStack& stack,
                     const std::string& config_text);

struct CheckpointData {
    std::string config_text;
    std::vector<std::pair<std::string, std::vector<float>>> params;
};

CheckpointData read_checkpoint(const std::string& path);

// Copies checkpoint values into a freshly built stack; names and extents must
// match the registry exactly.
void restore_params(LayerStack& stack, const CheckpointData& data);

}  // namespace dgsa
