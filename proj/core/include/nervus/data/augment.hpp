#pragma once

#include <string_view>

#include "nervus/data/image.hpp"
#include "nervus/random.hpp"

namespace nervus::data {

enum class Augmentation { kNone, kFlip, kCrop, kFlipCrop };

/// Zero padding added on each side before a random crop.
inline constexpr int kCropPadding = 4;

std::string_view to_string(Augmentation aug);
Augmentation parse_augmentation(std::string_view token);

/// flip: horizontal mirror with probability 0.5. crop: zero-pad kCropPadding
/// pixels per side, then crop a random window of the original size.
ImageTensor augment(const ImageTensor& image, Augmentation aug, Rng& rng);

/// The crop window at a fixed offset in [0, 2 * kCropPadding] on each axis.
ImageTensor padded_crop(const ImageTensor& image, int offset_y, int offset_x);
ImageTensor mirror_horizontal(const ImageTensor& image);

}  // namespace nervus::data
