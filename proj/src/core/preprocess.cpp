#include "pf/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace pf {

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct Tap {
  int index;
  double weight;
};

// Lanczos taps for every output sample along one axis.
std::vector<std::vector<Tap>> lanczos_taps(int in, int out) {
  const double scale = static_cast<double>(in) / out;
  const double widen = std::max(scale, 1.0);
  const double support = 3.0 * widen;
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) * scale;
    const int lo = std::max(0, static_cast<int>(std::floor(center - support)));
    const int hi = std::min(in - 1, static_cast<int>(std::ceil(center + support)));
    double total = 0;
    for (int j = lo; j <= hi; ++j) {
      const double w = lanczos3((j + 0.5 - center) / widen);
      if (w != 0.0) {
        taps[i].push_back({j, w});
        total += w;
      }
    }
    if (total == 0.0) {
      taps[i] = {{std::clamp(static_cast<int>(center), 0, in - 1), 1.0}};
      continue;
    }
    for (auto& t : taps[i]) t.weight /= total;
  }
  return taps;
}

}  // namespace

int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

double lanczos3(double x) noexcept {
  x = std::abs(x);
  if (x < 1e-12) return 1.0;
  if (x >= 3.0) return 0.0;
  const double px = std::numbers::pi * x;
  return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
}

GrayImage crop_core(const GrayImage& img, const CropSpec& spec) {
  require(spec.size > 0, ErrorKind::config, "crop size must be positive");
  require(spec.size <= img.width && spec.size <= img.height, ErrorKind::dimension,
          "crop size " + std::to_string(spec.size) + " exceeds image " + std::to_string(img.width) + "x" +
              std::to_string(img.height));
  const int x0 = std::clamp(spec.center_x - spec.size / 2, 0, img.width - spec.size);
  const int y0 = std::clamp(spec.center_y - spec.size / 2, 0, img.height - spec.size);
  GrayImage out(spec.size, spec.size);
  for (int y = 0; y < spec.size; ++y)
    for (int x = 0; x < spec.size; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
  return out;
}

GrayImage gaussian_denoise(const GrayImage& img, double sigma) {
  require(std::isfinite(sigma) && sigma > 0, ErrorKind::config, "gaussian sigma must be > 0");
  require(!img.empty(), ErrorKind::data, "gaussian_denoise: empty image");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double total = 0;
  for (int t = -r; t <= r; ++t) total += k[t + r] = std::exp(-(t * t) / (2 * sigma * sigma));
  for (auto& v : k) v /= total;

  const int W = img.width, H = img.height;
  std::vector<double> tmp(static_cast<std::size_t>(W) * H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double s = 0;
      for (int t = -r; t <= r; ++t) s += k[t + r] * img.at(reflect_index(x + t, W), y);
      tmp[static_cast<std::size_t>(y) * W + x] = s;
    }
  GrayImage out(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double s = 0;
      for (int t = -r; t <= r; ++t) s += k[t + r] * tmp[static_cast<std::size_t>(reflect_index(y + t, H)) * W + x];
      out.at(x, y) = to_u8(s);
    }
  return out;
}

GrayImage equalize_contrast(const GrayImage& img) {
  require(!img.empty(), ErrorKind::data, "equalize_contrast: empty image");
  std::array<std::size_t, 256> hist{};
  for (auto v : img.pixels) ++hist[v];
  const double total = static_cast<double>(img.pixels.size());
  const double cdf0 = hist[0] / total;
  if (hist[0] == img.pixels.size()) return img;
  std::array<std::uint8_t, 256> map{};
  std::size_t cum = 0;
  for (int v = 0; v < 256; ++v) {
    cum += hist[v];
    map[v] = to_u8(255.0 * (cum / total - cdf0) / (1.0 - cdf0));
  }
  GrayImage out = img;
  for (auto& v : out.pixels) v = map[v];
  return out;
}

GrayImage adaptive_binarize(const GrayImage& img, int window, double offset) {
  require(window >= 3 && window % 2 == 1, ErrorKind::config,
          "binarization window must be odd and >= 3, got " + std::to_string(window));
  require(!img.empty(), ErrorKind::data, "adaptive_binarize: empty image");
  const int W = img.width, H = img.height, r = window / 2;
  // Box sums with reflected edges, horizontal then vertical; integer-exact.
  std::vector<long> row(static_cast<std::size_t>(W) * H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      long s = 0;
      for (int t = -r; t <= r; ++t) s += img.at(reflect_index(x + t, W), y);
      row[static_cast<std::size_t>(y) * W + x] = s;
    }
  const double area = static_cast<double>(window) * window;
  GrayImage out(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      long s = 0;
      for (int t = -r; t <= r; ++t) s += row[static_cast<std::size_t>(reflect_index(y + t, H)) * W + x];
      out.at(x, y) = img.at(x, y) > s / area - offset ? 255 : 0;
    }
  return out;
}

GrayImage resize_lanczos(const GrayImage& img, int out_w, int out_h) {
  require(out_w >= 1 && out_h >= 1, ErrorKind::config, "resize target dimensions must be >= 1");
  require(!img.empty(), ErrorKind::data, "resize_lanczos: empty image");
  const int W = img.width, H = img.height;
  const auto tx = lanczos_taps(W, out_w);
  const auto ty = lanczos_taps(H, out_h);
  std::vector<double> tmp(static_cast<std::size_t>(out_w) * H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < out_w; ++x) {
      double s = 0;
      for (const Tap& t : tx[x]) s += t.weight * img.at(t.index, y);
      tmp[static_cast<std::size_t>(y) * out_w + x] = s;
    }
  GrayImage out(out_w, out_h);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      double s = 0;
      for (const Tap& t : ty[y]) s += t.weight * tmp[static_cast<std::size_t>(t.index) * out_w + x];
      out.at(x, y) = to_u8(s);
    }
  return out;
}

GrayImage preprocess_pipeline(const GrayImage& img, const CropSpec& spec, const PreprocessConfig& cfg) {
  GrayImage g = crop_core(img, spec);
  g = gaussian_denoise(g, cfg.sigma);
  g = equalize_contrast(g);
  g = adaptive_binarize(g, cfg.window, cfg.offset);
  return resize_lanczos(g, cfg.output_size, cfg.output_size);
}

}  // namespace pf
