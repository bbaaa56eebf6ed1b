#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace svp {

// 8-bit image, interleaved channels (1 = gray, 3 = RGB).
struct Image {
  int64_t width = 0, height = 0, channels = 1;
  std::vector<uint8_t> pixels;

  Image() = default;
  Image(int64_t w, int64_t h, int64_t c, uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(static_cast<size_t>(w * h * c), fill) {}
  uint8_t* at(int64_t x, int64_t y) { return &pixels[static_cast<size_t>((y * width + x) * channels)]; }
};

// Planar [C, H, W] floats in [0, 1] (C = 1 or 3) to an image; values clamp.
Image frame_to_image(std::span<const float> chw, int64_t c, int64_t h, int64_t w);

// Grid of equally sized tiles separated by `pad` pixels of `background`.
Image tile_grid(const std::vector<std::vector<Image>>& rows, int64_t pad = 1,
                uint8_t background = 255);

Image to_rgb(const Image& img);

// HSV colour wheel: hue from direction, saturation from magnitude relative to
// max_magnitude (<= 0 picks the field maximum). flow is planar [2, H, W].
Image flow_to_color(std::span<const float> flow, int64_t h, int64_t w, double max_magnitude = 0);

struct PlotSeries {
  std::vector<double> values;
  std::array<uint8_t, 3> color{0, 0, 0};
};

// Line chart of series against step index 1..n, with min/max y labels.
Image plot_series(const std::vector<PlotSeries>& series, int64_t width = 480,
                  int64_t height = 320);

void write_png(const Image& img, const std::string& path);
// Animated GIF; RGB inputs are converted to gray. delay in 1/100 s.
void write_gif(const std::vector<Image>& frames, const std::string& path, int delay_cs = 20);

}  // namespace svp
