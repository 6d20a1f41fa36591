#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "neuromime/core/error.hpp"

namespace neuromime {

/// 8-bit grayscale raster, row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h, fill) {}

  bool empty() const noexcept { return pixels.empty(); }
  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }

  void validate(const char* who) const {
    if (width == 0 || height == 0) throw InvalidInput(std::string(who) + ": empty image");
    if (pixels.size() != width * height)
      throw InvalidInput(std::string(who) + ": pixel buffer does not match dimensions");
  }

  bool operator==(const Image&) const = default;
};

}  // namespace neuromime
