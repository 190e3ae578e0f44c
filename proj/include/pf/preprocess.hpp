#pragma once

#include "pf/image.hpp"

namespace pf {

/// Square crop window centered on the pattern core.
struct CropSpec {
  int center_x = 0;
  int center_y = 0;
  int size = 0;
};

struct PreprocessConfig {
  double sigma = 1.5;        // Gaussian denoising
  int window = 25;           // adaptive binarization neighborhood (odd)
  double offset = 5.0;       // threshold = local mean - offset
  int output_size = 256;     // final square side
};

/// Reflects an out-of-range index back into [0, n) (edge sample repeated: -1 -> 0).
int reflect_index(int i, int n) noexcept;

/// size x size window around the center, shifted (never padded) to fit the image.
GrayImage crop_core(const GrayImage& img, const CropSpec& spec);

/// Separable Gaussian blur, radius ceil(3 sigma), normalized kernel, reflected edges.
GrayImage gaussian_denoise(const GrayImage& img, double sigma);

/// Global histogram equalization:
///   out(v) = round(255 * (cdf(v) - cdf(0)) / (1 - cdf(0)))
/// where cdf is the normalized cumulative histogram. Images whose every pixel is 0
/// are returned unchanged.
GrayImage equalize_contrast(const GrayImage& img);

/// 255 where value > (window mean - offset), else 0. Window must be odd and >= 3.
GrayImage adaptive_binarize(const GrayImage& img, int window, double offset);

/// Separable Lanczos-3 resampling. When shrinking, the kernel is widened by the
/// scale factor; weights are renormalized per output sample after clipping to the
/// image, and results are rounded and clamped to [0, 255].
GrayImage resize_lanczos(const GrayImage& img, int out_w, int out_h);

/// Lanczos-3 window: sinc(x) sinc(x/3) for |x| < 3, else 0.
double lanczos3(double x) noexcept;

/// crop -> denoise -> equalize -> binarize -> resize to output_size.
GrayImage preprocess_pipeline(const GrayImage& img, const CropSpec& spec, const PreprocessConfig& cfg);

}  // namespace pf
