// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "exai/attribution.hpp"
#include "exai/tensor.hpp"

namespace exai {

/// Throws IoError ("<what> not found: <path>") when the file is missing.
std::vector<std::byte> read_file(const std::filesystem::path& path, const char* what = "file");
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

/// Decodes an input image: binary PPM (P6, maxval 255, mapped to [0, 1]) or
/// raw little-endian float32 in CHW order. The result must match `dims`.
FloatTensor decode_image(std::span<const std::byte> bytes, Shape dims);

/// Binary PGM (P5, maxval 255).
std::vector<std::byte> encode_pgm(const Heatmap& hm);
Heatmap decode_pgm(std::span<const std::byte> bytes);

/// Little-endian float32, CHW.
std::vector<std::byte> encode_f32(const FloatTensor& t);
std::vector<float> decode_f32(std::span<const std::byte> bytes);

}  // namespace exai
