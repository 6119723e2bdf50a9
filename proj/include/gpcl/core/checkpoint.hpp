/*
 * Copyright 2026 The GPCL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <random>

#include "gpcl/core/model.hpp"
#include "gpcl/core/optimizer.hpp"

namespace gpcl {

/// Everything needed to resume or evaluate a run.
struct TrainState {
    Model model;
    AdamState adam;
    std::uint64_t epoch = 0;
    std::mt19937_64 rng;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "GPCL", u32 version, u64 + config text, u64 + meta text, u32
/// record count, records (u32 name length, name, u32 rows, u32 cols,
/// row-major little-endian f64), u32 CRC-32 of all preceding bytes.
std::vector<unsigned char> encode_checkpoint(const TrainState& state);
TrainState decode_checkpoint(const std::vector<unsigned char>& bytes);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);
/// Also rejects files whose shapes disagree with `expected` (VersionMismatch).
TrainState load_checkpoint(const std::filesystem::path& path, const RunConfig& expected);

}  // namespace gpcl
