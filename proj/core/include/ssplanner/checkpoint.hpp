// Copyright 2026 The ssplanner Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "ssplanner/planner.hpp"

namespace ssp::trainer {

// Versioned binary checkpoint: magic "SSPL", format version u32 LE, header
// byte length u64 LE, JSON header (model config, vocabulary token list, and
// the named tensor index with shapes and byte offsets), then row-major
// little-endian float32 tensor payloads.
inline constexpr char kCheckpointMagic[4] = {'S', 'S', 'P', 'L'};
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const planner::Model& model, const std::string& path);
planner::Model load_checkpoint(const std::string& path);

// In-memory round trip, used by save/load and handy for byte-level tests.
std::vector<char> serialize_checkpoint(const planner::Model& model);
planner::Model deserialize_checkpoint(const std::vector<char>& bytes);

}  // namespace ssp::trainer
