#include "harness/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>
#include <memory>

#include "common/error.hpp"

namespace wtt::harness {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kOutline{80, 150, 220};
constexpr Rgb kTarget{255, 200, 0};
constexpr Rgb kMarker{255, 255, 255};
constexpr Rgb kZone{110, 190, 255};
constexpr Rgb kLand{200, 160, 100};
constexpr Rgb kStorm{230, 60, 60};
constexpr Rgb kStormHit{60, 220, 90};

class Canvas {
 public:
  Canvas(Image& img, int ny, int scale) : img_(img), ny_(ny), scale_(scale) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    std::uint8_t* p = &img_.rgb[(static_cast<std::size_t>(y) * img_.width + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  // Map coordinates (cells, y north) to pixel coordinates.
  double px(double x) const { return x * scale_; }
  double py(double y) const { return (ny_ - y) * scale_; }

  void line(Vec2 a, Vec2 b, Rgb c) {
    const double x0 = px(a.x), y0 = py(a.y), x1 = px(b.x), y1 = py(b.y);
    const int n = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))));
    for (int k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      set(static_cast<int>(std::floor(x0 + (x1 - x0) * t)), static_cast<int>(std::floor(y0 + (y1 - y0) * t)), c);
    }
  }
  void polygon(const Polygon& poly, Rgb c) {
    for (std::size_t k = 0; k < poly.size(); ++k) line(poly[k], poly[(k + 1) % poly.size()], c);
  }
  void ring(Vec2 centre, double radius_px, Rgb c) {
    const int n = std::max(16, static_cast<int>(radius_px * 8));
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * std::numbers::pi * k / n;
      set(static_cast<int>(std::floor(px(centre.x) + radius_px * std::cos(a))),
          static_cast<int>(std::floor(py(centre.y) - radius_px * std::sin(a))), c);
    }
  }
  void cross(Vec2 centre, double half_px, Rgb c) {
    const double h = half_px / scale_;
    line({centre.x - h, centre.y - h}, {centre.x + h, centre.y + h}, c);
    line({centre.x - h, centre.y + h}, {centre.x + h, centre.y - h}, c);
  }
  void dot(Vec2 centre, int half, Rgb c) {
    const int cx = static_cast<int>(std::floor(px(centre.x))), cy = static_cast<int>(std::floor(py(centre.y)));
    for (int dy = -half; dy <= half; ++dy)
      for (int dx = -half; dx <= half; ++dx) set(cx + dx, cy + dy, c);
  }

 private:
  Image& img_;
  int ny_;
  int scale_;
};

}  // namespace

std::array<std::uint8_t, 3> Image::at(int x, int y) const {
  const std::uint8_t* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  return {p[0], p[1], p[2]};
}

std::uint64_t Image::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : rgb) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint8_t quantize_intensity(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

Image render_frame(const FrameView& view, unsigned flags, int scale) {
  if (scale < 1) throw Error(ErrorKind::InvalidArgument, "frame scale must be >= 1");
  if (view.nx < 1 || view.ny < 1 || view.trail.size() != static_cast<std::size_t>(view.nx) * view.ny)
    throw Error(ErrorKind::InvalidArgument, "frame view trail does not match its grid");
  Image img;
  img.width = view.nx * scale;
  img.height = view.ny * scale;
  img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  Canvas cv(img, view.ny, scale);

  for (int j = 0; j < view.ny; ++j) {
    const int top = (view.ny - 1 - j) * scale;
    for (int i = 0; i < view.nx; ++i) {
      const std::uint8_t g = view.trail[static_cast<std::size_t>(j) * view.nx + i];
      if (!g) continue;
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx) cv.set(i * scale + dx, top + dy, {g, g, g});
    }
  }

  if ((flags & kOverlayOutline) && view.solid.nx() == view.nx && view.solid.ny() == view.ny) {
    auto solid = [&](int i, int j) { return view.solid.in_bounds(i, j) && view.solid(i, j); };
    for (int j = 0; j < view.ny; ++j) {
      const int top = (view.ny - 1 - j) * scale;
      for (int i = 0; i < view.nx; ++i) {
        if (!solid(i, j)) continue;
        const int left = i * scale;
        for (int k = 0; k < scale; ++k) {
          if (!solid(i - 1, j) && i > 0) cv.set(left, top + k, kOutline);
          if (!solid(i + 1, j) && i + 1 < view.nx) cv.set(left + scale - 1, top + k, kOutline);
          if (!solid(i, j + 1) && j + 1 < view.ny) cv.set(left + k, top, kOutline);
          if (!solid(i, j - 1) && j > 0) cv.set(left + k, top + scale - 1, kOutline);
        }
      }
    }
  }

  if (flags & kOverlayMarkers) {
    if (view.lgm_zone.size() >= 3) cv.polygon(view.lgm_zone, kZone);
    if (view.nonameland.size() >= 3) cv.polygon(view.nonameland, kLand);
    if (view.o_marker) cv.ring(*view.o_marker, 1.5 * scale, kMarker);
    if (view.x_target) {
      cv.cross(*view.x_target, 1.5 * scale, kTarget);
      if (view.hit_radius > 0.0) cv.ring(*view.x_target, view.hit_radius * scale, kTarget);
    }
  }

  if (flags & kOverlayStorms)
    for (const auto& s : view.storms) cv.dot({s[0], s[1]}, std::max(1, scale / 2), s[2] != 0.0 ? kStormHit : kStorm);

  return img;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

void write_png(const std::string& path, const Image& img) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw Error(ErrorKind::Io, "cannot write image '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "libpng initialisation failed for '" + path + "'");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "failed writing image '" + path + "'");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(&img.rgb[static_cast<std::size_t>(y) * img.width * 3]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw Error(ErrorKind::Io, "failed writing image '" + path + "'");
}

Image read_png(const std::string& path) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str()))
    throw Error(ErrorKind::Io, "cannot read image '" + path + "': " + pi.message);
  pi.format = PNG_FORMAT_RGB;
  Image img;
  img.width = static_cast<int>(pi.width);
  img.height = static_cast<int>(pi.height);
  img.rgb.resize(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, img.rgb.data(), 0, nullptr)) {
    const std::string msg = pi.message;
    png_image_free(&pi);
    throw Error(ErrorKind::Io, "cannot decode image '" + path + "': " + msg);
  }
  return img;
}

}  // namespace wtt::harness
