#pragma once

#include <cstddef>

#include "pf/tensor.hpp"

namespace pf {

/// Zero padding per side. Asymmetric padding puts the extra row/column on the
/// bottom/right.
struct Padding {
  std::size_t top = 0, left = 0, bottom = 0, right = 0;

  static Padding symmetric(std::size_t p) { return {p, p, p, p}; }
  friend bool operator==(const Padding&, const Padding&) = default;
};

struct ConvGeometry {
  std::size_t stride = 1;
  Padding pad;
  // Transposed convolution only: extra output rows/cols (bottom/right), < stride.
  std::size_t output_padding = 0;
};

/// "Same"-style padding: output = ceil(in / stride), total padding split with the
/// extra unit on the bottom/right. Reduces to floor(k/2) per side for odd k, stride 1.
Padding same_padding(std::size_t in_h, std::size_t in_w, std::size_t kh, std::size_t kw, std::size_t stride);

std::size_t conv_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad_lo, std::size_t pad_hi);
std::size_t conv_transpose_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad_lo,
                                    std::size_t pad_hi, std::size_t output_padding);

Shape conv2d_shape(const Shape& input, const Shape& kernel, const ConvGeometry& geom);
Shape conv2d_transpose_shape(const Shape& input, const Shape& kernel, const ConvGeometry& geom);

// input [B,C,H,W], kernel [F,C,kh,kw] -> [B,F,H',W']
template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const ConvGeometry& geom);
template <class T>
Tensor<T> conv2d_backward_input(const Tensor<T>& grad_out, const Tensor<T>& kernel, const Shape& input_shape,
                                const ConvGeometry& geom);
template <class T>
Tensor<T> conv2d_backward_kernel(const Tensor<T>& grad_out, const Tensor<T>& input, const Shape& kernel_shape,
                                 const ConvGeometry& geom);

// input [B,F,H,W], kernel [F,C,kh,kw] -> [B,C,H'',W'']; the adjoint of conv2d.
template <class T>
Tensor<T> conv2d_transpose_forward(const Tensor<T>& input, const Tensor<T>& kernel, const ConvGeometry& geom);
template <class T>
Tensor<T> conv2d_transpose_backward_kernel(const Tensor<T>& grad_out, const Tensor<T>& input,
                                           const Shape& kernel_shape, const ConvGeometry& geom);

}  // namespace pf
