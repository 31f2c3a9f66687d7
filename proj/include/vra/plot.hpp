#ifndef VRA_PLOT_HPP
#define VRA_PLOT_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vra/image_io.hpp"

namespace vra {

using Rgb = std::array<std::uint8_t, 3>;

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  Rgb color{0, 0, 0};
};

/// Fixed palette cycled by series index.
Rgb palette_color(std::size_t index);

/// Line chart with a log10 x axis and a linear y axis over [y_min, y_max];
/// decade ticks on x and 0.1 ticks on y are labelled with digits.
RgbImage render_log_plot(const std::vector<Series>& series, int width = 640, int height = 400, double y_min = 0.0,
                         double y_max = 1.0);

}  // namespace vra

#endif  // VRA_PLOT_HPP
