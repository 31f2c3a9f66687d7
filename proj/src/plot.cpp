#include "vra/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace vra {
namespace {

// 3x5 glyphs, one row per entry, bit 2 is the leftmost column.
constexpr std::array<std::array<std::uint8_t, 5>, 11> kGlyphs{{
    {7, 5, 5, 5, 7},  // 0
    {2, 6, 2, 2, 7},  // 1
    {7, 1, 7, 4, 7},  // 2
    {7, 1, 7, 1, 7},  // 3
    {5, 5, 7, 1, 1},  // 4
    {7, 4, 7, 1, 7},  // 5
    {7, 4, 7, 5, 7},  // 6
    {7, 1, 1, 1, 1},  // 7
    {7, 5, 7, 5, 7},  // 8
    {7, 5, 7, 1, 7},  // 9
    {0, 0, 0, 0, 2},  // .
}};

class Canvas {
 public:
  explicit Canvas(RgbImage& img) : img_(img) {}

  void dot(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    std::copy(c.begin(), c.end(), img_.pixel(x, y));
  }

  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) dot(x, y, c);
    }
  }

  void line(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    const int r = thickness / 2;
    for (;;) {
      rect(x0 - r, y0 - r, x0 - r + thickness - 1, y0 - r + thickness - 1, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  /// Draws digits and '.' with the top-left corner at (x, y); returns the width.
  int text(int x, int y, const std::string& s, Rgb c, int scale = 2) {
    int cx = x;
    for (char ch : s) {
      const int g = ch == '.' ? 10 : (ch >= '0' && ch <= '9' ? ch - '0' : -1);
      if (g >= 0) {
        for (int row = 0; row < 5; ++row) {
          for (int col = 0; col < 3; ++col) {
            if (kGlyphs[g][row] & (4 >> col)) rect(cx + col * scale, y + row * scale, cx + (col + 1) * scale - 1,
                                                  y + (row + 1) * scale - 1, c);
          }
        }
      }
      cx += 4 * scale;
    }
    return cx - x;
  }

 private:
  RgbImage& img_;
};

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

Rgb palette_color(std::size_t index) {
  static constexpr std::array<Rgb, 8> kPalette{{{31, 119, 180},
                                                 {214, 39, 40},
                                                 {44, 160, 44},
                                                 {255, 127, 14},
                                                 {148, 103, 189},
                                                 {140, 86, 75},
                                                 {227, 119, 194},
                                                 {127, 127, 127}}};
  return kPalette[index % kPalette.size()];
}

RgbImage render_log_plot(const std::vector<Series>& series, int width, int height, double y_min, double y_max) {
  RgbImage img(width, height, 255);
  Canvas canvas(img);
  const int left = 56, right = width - 16, top = 16, bottom = height - 40;

  double lx_min = INFINITY, lx_max = -INFINITY;
  for (const auto& s : series) {
    for (double x : s.x) {
      if (x > 0.0) {
        lx_min = std::min(lx_min, std::log10(x));
        lx_max = std::max(lx_max, std::log10(x));
      }
    }
  }
  if (!std::isfinite(lx_min)) lx_min = lx_max = 0.0;
  lx_min = std::floor(lx_min);
  lx_max = std::max(std::ceil(lx_max), lx_min + 1.0);
  if (!(y_max > y_min)) y_max = y_min + 1.0;

  auto px = [&](double x) { return left + int(std::lround((std::log10(x) - lx_min) / (lx_max - lx_min) * (right - left))); };
  auto py = [&](double y) {
    const double t = std::clamp((y - y_min) / (y_max - y_min), 0.0, 1.0);
    return bottom - int(std::lround(t * (bottom - top)));
  };

  const Rgb grid{225, 225, 225}, axis{0, 0, 0};
  for (int k = 0; k <= 10; ++k) {
    const double y = y_min + (y_max - y_min) * k / 10.0;
    canvas.line(left, py(y), right, py(y), grid);
    const std::string label = tick_label(y);
    canvas.text(left - 8 - int(label.size()) * 8, py(y) - 5, label, axis);
  }
  for (int d = int(lx_min); d <= int(lx_max); ++d) {
    const double x = std::pow(10.0, d);
    canvas.line(px(x), top, px(x), bottom, grid);
    for (int m = 2; m < 10 && d < int(lx_max); ++m) {
      canvas.line(px(m * x), bottom - 4, px(m * x), bottom, axis);
    }
    const std::string label = tick_label(x);
    canvas.text(px(x) - int(label.size()) * 4, bottom + 10, label, axis);
  }
  canvas.line(left, top, left, bottom, axis);
  canvas.line(left, bottom, right, bottom, axis);

  for (const auto& s : series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    int prev_x = 0, prev_y = 0;
    bool have_prev = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(s.x[i] > 0.0) || !std::isfinite(s.y[i])) {
        have_prev = false;
        continue;
      }
      const int x = px(s.x[i]), y = py(s.y[i]);
      if (have_prev) canvas.line(prev_x, prev_y, x, y, s.color, 2);
      canvas.rect(x - 3, y - 3, x + 3, y + 3, s.color);
      prev_x = x;
      prev_y = y;
      have_prev = true;
    }
  }
  return img;
}

}  // namespace vra
