#ifndef VRA_IMAGE_IO_HPP
#define VRA_IMAGE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vra {

/// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

  std::uint8_t* pixel(int x, int y) { return data.data() + (std::size_t(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const { return data.data() + (std::size_t(y) * width + x) * 3; }
};

/// Throws LoadError when the file is missing or not a decodable PNG.
RgbImage read_png(const std::filesystem::path& path);
/// Throws IoError when the file cannot be written.
void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace vra

#endif  // VRA_IMAGE_IO_HPP
