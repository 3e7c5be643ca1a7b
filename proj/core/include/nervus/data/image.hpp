#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace nervus::data {

/// Planar (channel-major) image with values in [0, 1].
struct ImageTensor {
  int channels = 1;  // 1 or 3
  int height = 0;
  int width = 0;
  std::vector<float> values;  // [channels][height][width]

  float at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float& at(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool operator==(const ImageTensor&) const = default;
};

/// Decodes netpbm P2/P3/P5/P6 with maxval 255 (8-bit) or 65535 (16-bit,
/// big-endian samples in the binary variants). Values are divided by the maxval.
/// When `expected_bit_depth` is given the declared maxval must match it.
/// Throws FormatError on malformed headers, unsupported maxval, depth mismatch,
/// samples above maxval, or truncated payloads.
ImageTensor decode_image(std::span<const std::uint8_t> bytes,
                         std::optional<int> expected_bit_depth = std::nullopt);

ImageTensor read_image(const std::filesystem::path& path,
                       std::optional<int> expected_bit_depth = std::nullopt);

/// Binary netpbm (P5 for one channel, P6 for three) quantized to `bit_depth`.
std::vector<std::uint8_t> encode_netpbm(const ImageTensor& image, int bit_depth);

/// 1 -> 3 replicates the plane; 3 -> 1 applies luma weights (0.299, 0.587,
/// 0.114); same-to-same returns a copy.
ImageTensor convert_channels(const ImageTensor& image, int target_channels);

}  // namespace nervus::data
