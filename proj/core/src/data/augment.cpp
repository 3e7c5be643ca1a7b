#include "nervus/data/augment.hpp"

#include <string>

#include "nervus/error.hpp"

namespace nervus::data {

std::string_view to_string(Augmentation aug) {
  switch (aug) {
    case Augmentation::kNone: return "none";
    case Augmentation::kFlip: return "flip";
    case Augmentation::kCrop: return "crop";
    case Augmentation::kFlipCrop: return "flip+crop";
  }
  return "?";
}

Augmentation parse_augmentation(std::string_view token) {
  if (token == "none") return Augmentation::kNone;
  if (token == "flip") return Augmentation::kFlip;
  if (token == "crop") return Augmentation::kCrop;
  if (token == "flip+crop") return Augmentation::kFlipCrop;
  throw ConfigError("unknown augmentation '" + std::string(token) + "'");
}

ImageTensor mirror_horizontal(const ImageTensor& image) {
  ImageTensor out = image;
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
  return out;
}

ImageTensor padded_crop(const ImageTensor& image, int offset_y, int offset_x) {
  if (offset_y < 0 || offset_x < 0 || offset_y > 2 * kCropPadding || offset_x > 2 * kCropPadding) {
    throw Error("padded_crop: offset outside the padded frame");
  }
  ImageTensor out = image;
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < image.height; ++y) {
      const int sy = y + offset_y - kCropPadding;
      for (int x = 0; x < image.width; ++x) {
        const int sx = x + offset_x - kCropPadding;
        const bool inside = sy >= 0 && sx >= 0 && sy < image.height && sx < image.width;
        out.at(c, y, x) = inside ? image.at(c, sy, sx) : 0.0f;
      }
    }
  }
  return out;
}

ImageTensor augment(const ImageTensor& image, Augmentation aug, Rng& rng) {
  if (aug == Augmentation::kNone) return image;
  ImageTensor out = image;
  if (aug == Augmentation::kFlip || aug == Augmentation::kFlipCrop) {
    if (rng.bernoulli(0.5)) out = mirror_horizontal(out);
  }
  if (aug == Augmentation::kCrop || aug == Augmentation::kFlipCrop) {
    const int span = 2 * kCropPadding + 1;
    const int oy = static_cast<int>(rng.below(span));
    const int ox = static_cast<int>(rng.below(span));
    out = padded_crop(out, oy, ox);
  }
  return out;
}

}  // namespace nervus::data
