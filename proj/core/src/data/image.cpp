#include "nervus/data/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "nervus/error.hpp"

namespace nervus::data {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Next whitespace-delimited token, skipping '#' comments.
  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw FormatError("netpbm: truncated header");
    return out;
  }

  unsigned long number(const char* what) {
    const std::string t = token();
    for (char ch : t) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) {
        throw FormatError(std::string("netpbm: malformed ") + what + " '" + t + "'");
      }
    }
    if (t.size() > 9) throw FormatError(std::string("netpbm: ") + what + " out of range");
    return std::stoul(t);
  }

  // Binary rasters start after exactly one whitespace byte.
  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("netpbm: missing whitespace before raster");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ImageTensor decode_image(std::span<const std::uint8_t> bytes, std::optional<int> expected_bit_depth) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("netpbm: missing magic number");
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw FormatError(std::string("netpbm: unsupported variant P") + kind);
  }
  const bool binary = kind == '5' || kind == '6';
  const int channels = (kind == '3' || kind == '6') ? 3 : 1;

  HeaderReader reader(bytes.subspan(2));
  const unsigned long width = reader.number("width");
  const unsigned long height = reader.number("height");
  const unsigned long maxval = reader.number("maxval");
  if (width == 0 || height == 0) throw FormatError("netpbm: zero image extent");
  if (maxval != 255 && maxval != 65535) {
    throw FormatError("netpbm: maxval " + std::to_string(maxval) +
                      " unsupported (expected 255 or 65535)");
  }
  const int depth = maxval == 255 ? 8 : 16;
  if (expected_bit_depth && *expected_bit_depth != depth) {
    throw FormatError("netpbm: declared maxval " + std::to_string(maxval) + " is " +
                      std::to_string(depth) + "-bit but " +
                      std::to_string(*expected_bit_depth) + "-bit was expected");
  }

  ImageTensor image;
  image.channels = channels;
  image.width = static_cast<int>(width);
  image.height = static_cast<int>(height);
  const std::size_t pixels = width * height;
  image.values.resize(pixels * channels);
  const double scale = static_cast<double>(maxval);

  // Raster order is interleaved per pixel; storage is planar.
  auto store = [&](std::size_t sample, unsigned long code) {
    if (code > maxval) {
      throw FormatError("netpbm: sample " + std::to_string(code) + " exceeds maxval");
    }
    const std::size_t pixel = sample / channels;
    const std::size_t c = sample % channels;
    image.values[c * pixels + pixel] = static_cast<float>(static_cast<double>(code) / scale);
  };

  const std::size_t samples = pixels * channels;
  if (binary) {
    reader.single_whitespace();
    const std::size_t offset = 2 + reader.pos();
    const std::size_t bytes_per_sample = depth == 8 ? 1 : 2;
    if (bytes.size() < offset + samples * bytes_per_sample) {
      throw FormatError("netpbm: truncated payload");
    }
    const std::uint8_t* raster = bytes.data() + offset;
    for (std::size_t s = 0; s < samples; ++s) {
      const unsigned long code =
          depth == 8 ? raster[s]
                     : (static_cast<unsigned long>(raster[2 * s]) << 8) | raster[2 * s + 1];
      store(s, code);
    }
  } else {
    for (std::size_t s = 0; s < samples; ++s) {
      unsigned long code = 0;
      try {
        code = reader.number("sample");
      } catch (const FormatError&) {
        throw FormatError("netpbm: truncated or malformed ASCII payload");
      }
      store(s, code);
    }
  }
  return image;
}

ImageTensor read_image(const std::filesystem::path& path, std::optional<int> expected_bit_depth) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes, expected_bit_depth);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_netpbm(const ImageTensor& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw FormatError("netpbm: bit depth must be 8 or 16");
  if (image.channels != 1 && image.channels != 3) {
    throw FormatError("netpbm: images must have 1 or 3 channels");
  }
  const unsigned maxval = bit_depth == 8 ? 255u : 65535u;
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::size_t pixels = static_cast<std::size_t>(image.width) * image.height;
  for (std::size_t p = 0; p < pixels; ++p) {
    for (int c = 0; c < image.channels; ++c) {
      double v = image.values[c * pixels + p];
      v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      const auto code = static_cast<unsigned>(std::lround(v * maxval));
      if (bit_depth == 16) out.push_back(static_cast<std::uint8_t>(code >> 8));
      out.push_back(static_cast<std::uint8_t>(code & 0xFF));
    }
  }
  return out;
}

ImageTensor convert_channels(const ImageTensor& image, int target_channels) {
  if (target_channels != 1 && target_channels != 3) {
    throw FormatError("target channel count must be 1 or 3");
  }
  if (image.channels != 1 && image.channels != 3) {
    throw FormatError("source image must have 1 or 3 channels");
  }
  if (image.channels == target_channels) return image;

  const std::size_t pixels = static_cast<std::size_t>(image.width) * image.height;
  ImageTensor out;
  out.channels = target_channels;
  out.height = image.height;
  out.width = image.width;
  if (target_channels == 3) {
    out.values.reserve(3 * pixels);
    for (int c = 0; c < 3; ++c)
      out.values.insert(out.values.end(), image.values.begin(), image.values.end());
    return out;
  }
  // Evaluated in double so equal channels reproduce their common value exactly.
  out.values.resize(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    const double luma = 0.299 * image.values[p] + 0.587 * image.values[pixels + p] +
                        0.114 * image.values[2 * pixels + p];
    out.values[p] = static_cast<float>(luma);
  }
  return out;
}

}  // namespace nervus::data
