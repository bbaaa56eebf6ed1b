#include "svp/imageio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>

#include <png.h>

#include "svp/datagen.hpp"
#include "svp/errors.hpp"

namespace svp {
namespace {

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void ensure_parent(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

Image to_gray(const Image& img) {
  if (img.channels == 1) return img;
  Image out(img.width, img.height, 1);
  for (int64_t i = 0; i < img.width * img.height; ++i) {
    const uint8_t* p = &img.pixels[static_cast<size_t>(i * img.channels)];
    out.pixels[static_cast<size_t>(i)] =
        static_cast<uint8_t>(std::lround(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]));
  }
  return out;
}

void put_pixel(Image& img, int64_t x, int64_t y, const std::array<uint8_t, 3>& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  uint8_t* p = img.at(x, y);
  for (int64_t ch = 0; ch < img.channels; ++ch) p[ch] = c[static_cast<size_t>(ch)];
}

void draw_line(Image& img, double x0, double y0, double x1, double y1,
               const std::array<uint8_t, 3>& c) {
  const int64_t n = std::max<int64_t>(1, std::lround(std::max(std::abs(x1 - x0), std::abs(y1 - y0))));
  for (int64_t i = 0; i <= n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n);
    put_pixel(img, std::lround(x0 + f * (x1 - x0)), std::lround(y0 + f * (y1 - y0)), c);
  }
}

void draw_text(Image& img, int64_t x, int64_t y, const std::string& text) {
  for (char ch : text) {
    const auto& rows = glyph_rows(ch);
    for (int r = 0; r < 7; ++r)
      for (int col = 0; col < 5; ++col)
        if (rows[r] & (1 << (4 - col))) put_pixel(img, x + col, y + r, {0, 0, 0});
    x += 6;
  }
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

class BitWriter {
 public:
  void put(uint32_t code, int width) {
    acc_ |= static_cast<uint64_t>(code) << nbits_;
    nbits_ += width;
    while (nbits_ >= 8) {
      bytes.push_back(static_cast<uint8_t>(acc_ & 0xff));
      acc_ >>= 8;
      nbits_ -= 8;
    }
  }
  void flush() {
    if (nbits_ > 0) bytes.push_back(static_cast<uint8_t>(acc_ & 0xff));
    acc_ = 0;
    nbits_ = 0;
  }
  std::vector<uint8_t> bytes;

 private:
  uint64_t acc_ = 0;
  int nbits_ = 0;
};

// Uncompressed LZW: literal codes only, with a clear code often enough that
// the code width never grows past 9 bits.
std::vector<uint8_t> lzw_literals(const std::vector<uint8_t>& indices) {
  constexpr uint32_t kClear = 256, kEnd = 257;
  BitWriter bw;
  bw.put(kClear, 9);
  int since_clear = 0;
  for (uint8_t v : indices) {
    if (since_clear == 250) {
      bw.put(kClear, 9);
      since_clear = 0;
    }
    bw.put(v, 9);
    ++since_clear;
  }
  bw.put(kEnd, 9);
  bw.flush();
  return bw.bytes;
}

}  // namespace

Image frame_to_image(std::span<const float> chw, int64_t c, int64_t h, int64_t w) {
  if (c != 1 && c != 3) throw ShapeError("images need 1 or 3 channels");
  if (static_cast<int64_t>(chw.size()) != c * h * w) throw ShapeError("frame buffer size mismatch");
  Image img(w, h, c);
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) img.at(x, y)[ch] = to_byte(chw[(ch * h + y) * w + x]);
  return img;
}

Image to_rgb(const Image& img) {
  if (img.channels == 3) return img;
  Image out(img.width, img.height, 3);
  for (int64_t i = 0; i < img.width * img.height; ++i)
    for (int ch = 0; ch < 3; ++ch)
      out.pixels[static_cast<size_t>(i * 3 + ch)] = img.pixels[static_cast<size_t>(i)];
  return out;
}

Image tile_grid(const std::vector<std::vector<Image>>& rows, int64_t pad, uint8_t background) {
  if (rows.empty() || rows.front().empty()) throw ShapeError("empty image grid");
  const Image& first = rows.front().front();
  int64_t channels = 1;
  size_t cols = 0;
  for (const auto& r : rows) {
    cols = std::max(cols, r.size());
    for (const auto& t : r) {
      if (t.width != first.width || t.height != first.height)
        throw ShapeError("grid tiles must share one size");
      channels = std::max(channels, t.channels);
    }
  }
  const int64_t n_cols = static_cast<int64_t>(cols), n_rows = static_cast<int64_t>(rows.size());
  Image out(n_cols * first.width + (n_cols + 1) * pad, n_rows * first.height + (n_rows + 1) * pad,
            channels, background);
  for (int64_t r = 0; r < n_rows; ++r)
    for (size_t c = 0; c < rows[r].size(); ++c) {
      const Image tile = channels == 3 ? to_rgb(rows[r][c]) : rows[r][c];
      const int64_t ox = pad + static_cast<int64_t>(c) * (first.width + pad);
      const int64_t oy = pad + r * (first.height + pad);
      for (int64_t y = 0; y < tile.height; ++y)
        std::copy_n(&tile.pixels[static_cast<size_t>(y * tile.width * channels)],
                    tile.width * channels, out.at(ox, oy + y));
    }
  return out;
}

Image flow_to_color(std::span<const float> flow, int64_t h, int64_t w, double max_magnitude) {
  if (static_cast<int64_t>(flow.size()) != 2 * h * w) throw ShapeError("flow buffer size mismatch");
  const int64_t n = h * w;
  if (max_magnitude <= 0) {
    for (int64_t i = 0; i < n; ++i) max_magnitude = std::max(max_magnitude, std::hypot(double(flow[i]), double(flow[n + i])));
    if (max_magnitude <= 0) max_magnitude = 1;
  }
  Image img(w, h, 3);
  for (int64_t i = 0; i < n; ++i) {
    const double dx = flow[i], dy = flow[n + i];
    const double hue = (std::atan2(dy, dx) / std::numbers::pi + 1.0) * 3.0;  // [0, 6]
    const double sat = std::min(1.0, std::hypot(dx, dy) / max_magnitude);
    const double x = 1.0 - std::abs(std::fmod(hue, 2.0) - 1.0);
    double rgb[3];
    switch (static_cast<int>(hue) % 6) {
      case 0: rgb[0] = 1, rgb[1] = x, rgb[2] = 0; break;
      case 1: rgb[0] = x, rgb[1] = 1, rgb[2] = 0; break;
      case 2: rgb[0] = 0, rgb[1] = 1, rgb[2] = x; break;
      case 3: rgb[0] = 0, rgb[1] = x, rgb[2] = 1; break;
      case 4: rgb[0] = x, rgb[1] = 0, rgb[2] = 1; break;
      default: rgb[0] = 1, rgb[1] = 0, rgb[2] = x; break;
    }
    uint8_t* p = &img.pixels[static_cast<size_t>(i * 3)];
    for (int c = 0; c < 3; ++c) p[c] = to_byte(1.0 - sat + sat * rgb[c]);
  }
  return img;
}

Image plot_series(const std::vector<PlotSeries>& series, int64_t width, int64_t height) {
  Image img(width, height, 3, 255);
  double lo = INFINITY, hi = -INFINITY;
  size_t len = 0;
  for (const auto& s : series) {
    len = std::max(len, s.values.size());
    for (double v : s.values)
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
  const double left = 48, right = width - 10, top = 10, bottom = height - 20;
  draw_line(img, left, top, left, bottom, {0, 0, 0});
  draw_line(img, left, bottom, right, bottom, {0, 0, 0});
  draw_text(img, 2, static_cast<int64_t>(top), label(hi));
  draw_text(img, 2, static_cast<int64_t>(bottom) - 7, label(lo));
  draw_text(img, static_cast<int64_t>(left), static_cast<int64_t>(bottom) + 6, "1");
  draw_text(img, static_cast<int64_t>(right) - 12, static_cast<int64_t>(bottom) + 6, std::to_string(len));
  auto px = [&](size_t i) { return len <= 1 ? left : left + (right - left) * i / (len - 1.0); };
  auto py = [&](double v) { return bottom - (bottom - top) * (v - lo) / (hi - lo); };
  for (const auto& s : series)
    for (size_t i = 0; i < s.values.size(); ++i) {
      if (i > 0) draw_line(img, px(i - 1), py(s.values[i - 1]), px(i), py(s.values[i]), s.color);
      for (int d = -1; d <= 1; ++d)
        draw_line(img, px(i) - 1, py(s.values[i]) + d, px(i) + 1, py(s.values[i]) + d, s.color);
    }
  return img;
}

void write_png(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3) throw ShapeError("PNG output needs 1 or 3 channels");
  ensure_parent(path);
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing '" + path + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int64_t y = 0; y < img.height; ++y)
    png_write_row(png, img.pixels.data() + y * img.width * img.channels);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_gif(const std::vector<Image>& frames, const std::string& path, int delay_cs) {
  if (frames.empty()) throw ShapeError("a GIF needs at least one frame");
  const int64_t w = frames.front().width, h = frames.front().height;
  if (w > 65535 || h > 65535) throw ShapeError("GIF dimensions exceed 65535");
  std::vector<uint8_t> out{'G', 'I', 'F', '8', '9', 'a'};
  auto u16 = [&](int64_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
  };
  u16(w);
  u16(h);
  out.insert(out.end(), {0xF7, 0, 0});  // global 256-entry table
  for (int i = 0; i < 256; ++i) out.insert(out.end(), {uint8_t(i), uint8_t(i), uint8_t(i)});
  // Loop forever.
  out.insert(out.end(), {0x21, 0xFF, 0x0B, 'N', 'E', 'T', 'S', 'C', 'A', 'P', 'E', '2', '.', '0',
                         0x03, 0x01, 0x00, 0x00, 0x00});
  for (const auto& frame : frames) {
    if (frame.width != w || frame.height != h) throw ShapeError("GIF frames must share one size");
    out.insert(out.end(), {0x21, 0xF9, 0x04, 0x00});
    u16(delay_cs);
    out.insert(out.end(), {0x00, 0x00});
    out.push_back(0x2C);
    u16(0);
    u16(0);
    u16(w);
    u16(h);
    out.push_back(0x00);
    out.push_back(8);  // minimum code size
    const auto data = lzw_literals(to_gray(frame).pixels);
    for (size_t i = 0; i < data.size(); i += 255) {
      const size_t n = std::min<size_t>(255, data.size() - i);
      out.push_back(static_cast<uint8_t>(n));
      out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(i),
                 data.begin() + static_cast<std::ptrdiff_t>(i + n));
    }
    out.push_back(0x00);
  }
  out.push_back(0x3B);
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace svp
