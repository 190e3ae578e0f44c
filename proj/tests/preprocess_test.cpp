#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pf/preprocess.hpp"
#include "pf/synth.hpp"

using namespace pf;

namespace {

GrayImage random_image(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  GrayImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(d(rng));
  return img;
}

double sinc(double x) {
  if (x == 0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double lanczos_oracle(double x) { return std::abs(x) < 3 ? sinc(x) * sinc(x / 3) : 0.0; }

}  // namespace

TEST(Reflect, EdgeSampleRepeated) {
  EXPECT_EQ(reflect_index(-1, 5), 0);
  EXPECT_EQ(reflect_index(-2, 5), 1);
  EXPECT_EQ(reflect_index(5, 5), 4);
  EXPECT_EQ(reflect_index(6, 5), 3);
  EXPECT_EQ(reflect_index(2, 5), 2);
  EXPECT_EQ(reflect_index(-7, 1), 0);
}

TEST(Crop, CenteredWindow) {
  GrayImage img(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) img.at(x, y) = static_cast<std::uint8_t>(x + 10 * y);
  const auto c = crop_core(img, {5, 5, 4});
  ASSERT_EQ(c.width, 4);
  EXPECT_EQ(c.at(0, 0), 3 + 30);
  EXPECT_EQ(c.at(3, 3), 6 + 60);
}

TEST(Crop, ShiftedInsideNearBorder) {
  GrayImage img(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) img.at(x, y) = static_cast<std::uint8_t>(x + 10 * y);
  const auto c = crop_core(img, {0, 9, 4});
  EXPECT_EQ(c.at(0, 0), 0 + 60);
  EXPECT_EQ(c.at(3, 3), 3 + 90);
}

TEST(Crop, Errors) {
  GrayImage img(10, 8);
  EXPECT_THROW(crop_core(img, {5, 4, 9}), Error);
  EXPECT_THROW(crop_core(img, {5, 4, 0}), Error);
}

TEST(Gaussian, ImpulseMatchesKernelOracle) {
  GrayImage img(21, 21, 0);
  img.at(10, 10) = 255;
  const double sigma = 1.5;
  const auto out = gaussian_denoise(img, sigma);
  std::vector<double> k;
  double total = 0;
  for (int t = -5; t <= 5; ++t) total += k.emplace_back(std::exp(-t * t / (2 * sigma * sigma)));
  for (int dy = -5; dy <= 5; ++dy)
    for (int dx = -5; dx <= 5; ++dx) {
      const double expect = 255.0 * k[dx + 5] * k[dy + 5] / (total * total);
      EXPECT_EQ(out.at(10 + dx, 10 + dy), std::lround(expect)) << dx << "," << dy;
    }
  EXPECT_EQ(out.at(10 + 6, 10), 0);
}

TEST(Gaussian, BoundedAndConstantPreserving) {
  const auto img = random_image(30, 20, 1);
  const auto out = gaussian_denoise(img, 2.0);
  const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  for (auto v : out.pixels) {
    EXPECT_GE(v, *lo);
    EXPECT_LE(v, *hi);
  }
  EXPECT_EQ(gaussian_denoise(GrayImage(9, 7, 77), 1.5), GrayImage(9, 7, 77));
  EXPECT_THROW(gaussian_denoise(img, 0.0), Error);
}

TEST(Equalize, UniformIsIdentity) {
  GrayImage img(16, 16);
  for (int i = 0; i < 256; ++i) img.pixels[i] = static_cast<std::uint8_t>(i);
  EXPECT_EQ(equalize_contrast(img), img);
}

TEST(Equalize, TwoLevelHandCdf) {
  GrayImage img(4, 4, 50);
  for (int i = 0; i < 4; ++i) img.pixels[i] = 200;
  const auto out = equalize_contrast(img);
  EXPECT_EQ(out.pixels[0], 255);
  EXPECT_EQ(out.pixels[15], 191);  // 255 * 0.75 = 191.25
}

TEST(Equalize, ConstantStaysConstant) {
  for (int v : {0, 1, 128, 255}) {
    const auto out = equalize_contrast(GrayImage(5, 5, static_cast<std::uint8_t>(v)));
    for (auto p : out.pixels) EXPECT_EQ(p, out.pixels[0]);
  }
}

TEST(Equalize, MonotoneMapping) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    auto img = random_image(20, 20, seed);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(p / 3 + 40);
    const auto out = equalize_contrast(img);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      for (std::size_t j = 0; j < img.pixels.size(); j += 7)
        if (img.pixels[i] <= img.pixels[j]) {
          EXPECT_LE(out.pixels[i], out.pixels[j]);
        }
  }
}

TEST(Binarize, ConstantImageAllWhite) {
  const auto out = adaptive_binarize(GrayImage(12, 9, 90), 5, 10);
  for (auto p : out.pixels) EXPECT_EQ(p, 255);
}

TEST(Binarize, StripesPreserved) {
  GrayImage img(10, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 10; ++x) img.at(x, y) = x % 2 ? 255 : 0;
  EXPECT_EQ(adaptive_binarize(img, 3, 0), img);
}

TEST(Binarize, SupportIsTwoLevel) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const auto out = adaptive_binarize(random_image(40, 33, seed), 25, 5);
    for (auto p : out.pixels) EXPECT_TRUE(p == 0 || p == 255);
  }
}

TEST(Binarize, EvenWindowRejected) {
  EXPECT_THROW(adaptive_binarize(GrayImage(8, 8), 4, 0), Error);
  EXPECT_THROW(adaptive_binarize(GrayImage(8, 8), 1, 0), Error);
}

TEST(Lanczos, KernelValues) {
  EXPECT_DOUBLE_EQ(lanczos3(0), 1.0);
  EXPECT_NEAR(lanczos3(1), 0.0, 1e-15);
  EXPECT_EQ(lanczos3(3.0), 0.0);
  for (double x : {0.25, 0.5, 1.3, 2.7, -1.9}) EXPECT_NEAR(lanczos3(x), lanczos_oracle(x), 1e-14);
}

TEST(Lanczos, Identity) {
  const auto img = random_image(17, 11, 3);
  EXPECT_EQ(resize_lanczos(img, 17, 11), img);
}

TEST(Lanczos, ConstantAnyScale) {
  for (auto [w, h] : {std::pair{3, 5}, {40, 40}, {1, 1}, {64, 7}}) {
    const auto out = resize_lanczos(GrayImage(20, 13, 123), w, h);
    for (auto p : out.pixels) EXPECT_EQ(p, 123);
  }
}

TEST(Lanczos, DownscaleRowOracle) {
  const GrayImage img(4, 1, std::vector<std::uint8_t>{0, 0, 255, 255});
  const auto out = resize_lanczos(img, 2, 1);
  const std::vector<double> src{0, 0, 255, 255};
  for (int i = 0; i < 2; ++i) {
    const double center = (i + 0.5) * 2.0;
    double num = 0, den = 0;
    for (int j = 0; j < 4; ++j) {
      const double w = lanczos_oracle((j + 0.5 - center) / 2.0);
      num += w * src[j];
      den += w;
    }
    EXPECT_EQ(out.pixels[i], std::clamp(std::lround(num / den), 0L, 255L)) << i;
  }
}

TEST(Lanczos, ZeroDimsRejected) {
  EXPECT_THROW(resize_lanczos(GrayImage(4, 4), 0, 3), Error);
}

TEST(Pipeline, ShapesAndTwoLevelInterior) {
  const auto img = random_image(512, 512, 9);
  PreprocessConfig cfg;
  const CropSpec spec{256, 256, 400};
  const auto out = preprocess_pipeline(img, spec, cfg);
  EXPECT_EQ(out.width, 256);
  EXPECT_EQ(out.height, 256);
  const auto again = preprocess_pipeline(out, {128, 128, 200}, cfg);
  EXPECT_EQ(again.width, 256);
  EXPECT_EQ(again.height, 256);

  auto g = crop_core(img, spec);
  g = adaptive_binarize(equalize_contrast(gaussian_denoise(g, cfg.sigma)), cfg.window, cfg.offset);
  for (auto p : g.pixels) EXPECT_TRUE(p == 0 || p == 255);
  EXPECT_EQ(resize_lanczos(g, 256, 256), out);
}

TEST(Pipeline, Deterministic) {
  const auto img = random_image(300, 280, 4);
  EXPECT_EQ(preprocess_pipeline(img, {150, 140, 200}, {}), preprocess_pipeline(img, {150, 140, 200}, {}));
}

TEST(Pipeline, WhorlGolden) {
  SynthConfig cfg;
  const auto s = generate_sample(cfg, 1);
  ASSERT_EQ(s.label, PatternClass::whorl);
  const auto out = preprocess_pipeline(s.image, {s.center_x, s.center_y, cfg.size * 200 / 256}, {});
  const auto golden = read_png(PF_TEST_DATA_DIR "/whorl_pipeline_golden.png");
  ASSERT_EQ(golden.width, out.width);
  ASSERT_EQ(golden.height, out.height);
  double mad = 0;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) mad += std::abs(int(out.pixels[i]) - int(golden.pixels[i]));
  mad /= static_cast<double>(out.pixels.size());
  EXPECT_LT(mad, 2.0);
}
