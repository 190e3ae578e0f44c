#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pf/error.hpp"

namespace pf {

/// 8-bit single-channel raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(checked_size(w, h), fill) {}
  GrayImage(int w, int h, std::vector<std::uint8_t> px) : width(w), height(h), pixels(std::move(px)) {
    require(pixels.size() == checked_size(w, h), ErrorKind::dimension, "pixel count does not match width*height");
  }

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const noexcept { return pixels.empty(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  static std::size_t checked_size(int w, int h) {
    require(w > 0 && h > 0, ErrorKind::dimension, "image dimensions must be positive");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
};

/// Reads an 8-bit grayscale PNG. Other color types or bit depths are data errors.
GrayImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& img);

/// Horizontal mirror.
GrayImage mirror_x(const GrayImage& img);

}  // namespace pf
