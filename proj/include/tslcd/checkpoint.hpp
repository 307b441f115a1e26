// Copyright (c) 2026 The tslcd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "tslcd/network.hpp"

namespace tslcd::checkpoint {

// File layout: "TSLW", u16 version, u32 tensor count, then per tensor u32 rank, u32 dims[rank]
// and row-major little-endian f32 data. Conv weights are stored [out][in][3][3] followed by the
// [out] bias; a full model appends fc1 weight [hidden][2F], fc1 bias [hidden], fc2 weight
// [1][hidden] and fc2 bias [1].

void save_extractor(const network::ExtractorParams<float>& params,
                    const std::filesystem::path& path);
network::ExtractorParams<float> load_extractor(const std::filesystem::path& path);

void save_model(const network::ModelParams& params, const std::filesystem::path& path);
network::ModelParams load_model(const std::filesystem::path& path);

}  // namespace tslcd::checkpoint
