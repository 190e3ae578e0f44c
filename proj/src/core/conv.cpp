#include "pf/conv.hpp"

#include <Eigen/Core>
#include <algorithm>

#include "pf/parallel.hpp"

namespace pf {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

// Spatial layout of one side of a convolution: the padded "image" side and the
// strided "grid" side.
struct Layout {
  std::size_t channels, img_h, img_w, kh, kw, grid_h, grid_w, stride, pad_top, pad_left;

  std::size_t col_rows() const { return channels * kh * kw; }
  std::size_t col_cols() const { return grid_h * grid_w; }
};

// Grid positions [lo, hi) whose tap at kernel offset j lands inside [0, extent).
std::pair<std::size_t, std::size_t> valid_range(std::size_t grid, std::size_t stride, std::size_t j, std::size_t pad,
                                                std::size_t extent) {
  // Tap position is o*stride + j - pad.
  const std::size_t lo = j >= pad ? 0 : (pad - j + stride - 1) / stride;
  const long last = static_cast<long>(extent) - 1 + static_cast<long>(pad) - static_cast<long>(j);
  const std::size_t hi = last < 0 ? 0 : std::min(grid, static_cast<std::size_t>(last) / stride + 1);
  return {std::min(lo, hi), hi};
}

// Strided access is done through stride x stride phase planes: plane (py, px) holds
// img[y*s + py][x*s + px], so every im2col row is a contiguous copy.
struct Phases {
  std::size_t s, h, w;  // stride, plane height, plane width
  std::size_t plane(std::size_t c, std::size_t py, std::size_t px) const { return ((c * s + py) * s + px) * h * w; }
};

Phases phases_of(const Layout& l) {
  return {l.stride, (l.img_h + l.stride - 1) / l.stride, (l.img_w + l.stride - 1) / l.stride};
}

template <class T>
T* scratch(std::size_t n, int slot);

// Row r of the column matrix starts at cols + r * pitch (pitch >= col_cols()).
template <class T>
void im2col(const T* img, const Layout& l, T* cols, std::size_t pitch = 0) {
  const std::size_t ncols = l.col_cols();
  if (pitch == 0) pitch = ncols;
  const Phases ph = phases_of(l);
  const T* planes = img;
  if (l.stride > 1) {
    T* buf = scratch<T>(l.channels * l.stride * l.stride * ph.h * ph.w, 1);
    for (std::size_t c = 0; c < l.channels; ++c)
      for (std::size_t y = 0; y < l.img_h; ++y)
        for (std::size_t x = 0; x < l.img_w; ++x)
          buf[ph.plane(c, y % l.stride, x % l.stride) + (y / l.stride) * ph.w + x / l.stride] =
              img[(c * l.img_h + y) * l.img_w + x];
    planes = buf;
  }
  for (std::size_t c = 0; c < l.channels; ++c)
    for (std::size_t i = 0; i < l.kh; ++i) {
      const auto [ylo, yhi] = valid_range(l.grid_h, l.stride, i, l.pad_top, l.img_h);
      for (std::size_t j = 0; j < l.kw; ++j) {
        const auto [xlo, xhi] = valid_range(l.grid_w, l.stride, j, l.pad_left, l.img_w);
        T* row = cols + ((c * l.kh + i) * l.kw + j) * pitch;
        std::fill(row, row + ylo * l.grid_w, T{0});
        for (std::size_t oy = ylo; oy < yhi; ++oy) {
          T* dst = row + oy * l.grid_w;
          std::fill(dst, dst + xlo, T{0});
          if (xlo < xhi) {
            const std::size_t y = oy * l.stride + i - l.pad_top;
            const std::size_t x = xlo * l.stride + j - l.pad_left;
            const T* src = l.stride > 1
                               ? planes + ph.plane(c, y % l.stride, x % l.stride) + (y / l.stride) * ph.w + x / l.stride
                               : planes + (c * l.img_h + y) * l.img_w + x;
            std::copy(src, src + (xhi - xlo), dst + xlo);
          }
          std::fill(dst + xhi, dst + l.grid_w, T{0});
        }
        std::fill(row + yhi * l.grid_w, row + ncols, T{0});
      }
    }
}

// Scatter-add of columns back into an image (accumulates into `img`).
template <class T>
void col2im(const T* cols, const Layout& l, T* img) {
  const std::size_t ncols = l.col_cols();
  const Phases ph = phases_of(l);
  T* planes = img;
  const std::size_t plane_total = l.channels * l.stride * l.stride * ph.h * ph.w;
  if (l.stride > 1) {
    planes = scratch<T>(plane_total, 1);
    std::fill(planes, planes + plane_total, T{0});
  }
  for (std::size_t c = 0; c < l.channels; ++c)
    for (std::size_t i = 0; i < l.kh; ++i) {
      const auto [ylo, yhi] = valid_range(l.grid_h, l.stride, i, l.pad_top, l.img_h);
      for (std::size_t j = 0; j < l.kw; ++j) {
        const auto [xlo, xhi] = valid_range(l.grid_w, l.stride, j, l.pad_left, l.img_w);
        if (xlo >= xhi) continue;
        const T* row = cols + ((c * l.kh + i) * l.kw + j) * ncols;
        for (std::size_t oy = ylo; oy < yhi; ++oy) {
          const std::size_t y = oy * l.stride + i - l.pad_top;
          const std::size_t x = xlo * l.stride + j - l.pad_left;
          T* dst = l.stride > 1 ? planes + ph.plane(c, y % l.stride, x % l.stride) + (y / l.stride) * ph.w + x / l.stride
                                : planes + (c * l.img_h + y) * l.img_w + x;
          const T* src = row + oy * l.grid_w + xlo;
          for (std::size_t n = 0; n < xhi - xlo; ++n) dst[n] += src[n];
        }
      }
    }
  if (l.stride > 1)
    for (std::size_t c = 0; c < l.channels; ++c)
      for (std::size_t y = 0; y < l.img_h; ++y)
        for (std::size_t x = 0; x < l.img_w; ++x)
          img[(c * l.img_h + y) * l.img_w + x] +=
              planes[ph.plane(c, y % l.stride, x % l.stride) + (y / l.stride) * ph.w + x / l.stride];
}

// Per-thread column buffer, reused across calls to avoid page-faulting a fresh
// multi-megabyte allocation for every sample.
template <class T>
T* scratch(std::size_t n, int slot) {
  thread_local std::vector<T> buf[3];
  if (buf[slot].size() < n) buf[slot].resize(n);
  return buf[slot].data();
}

// Kernel gradients: sum over samples of A_b [rows x n] * im2col(img_b)^T. Samples
// are taken in fixed groups so the summation order is independent of the thread
// count; each group is one GEMM with inner dimension group * n.
constexpr std::size_t kGradGroup = 8;

template <class T>
void accumulate_outer(const T* a, std::size_t a_stride, std::size_t rows, const T* imgs, std::size_t img_stride,
                      const Layout& l, std::size_t batch, T* out) {
  const std::size_t n = l.col_cols();
  const std::size_t groups = (batch + kGradGroup - 1) / kGradGroup;
  std::vector<RowMat<T>> partial(groups);
  parallel_for(groups, [&](std::size_t gi) {
    const std::size_t b0 = gi * kGradGroup, size = std::min(kGradGroup, batch - b0), pitch = size * n;
    T* cols = scratch<T>(l.col_rows() * pitch, 0);
    T* abuf = scratch<T>(rows * pitch, 2);
    for (std::size_t g = 0; g < size; ++g) {
      im2col(imgs + (b0 + g) * img_stride, l, cols + g * n, pitch);
      for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(a + (b0 + g) * a_stride + r * n, n, abuf + r * pitch + g * n);
    }
    partial[gi] = ConstMapMat<T>(abuf, rows, pitch) * ConstMapMat<T>(cols, l.col_rows(), pitch).transpose();
  });
  MapMat<T> acc(out, rows, l.col_rows());
  acc.setZero();
  for (const auto& p : partial) acc += p;
}

void check_geometry(const ConvGeometry& g) {
  require(g.stride >= 1, ErrorKind::config, "convolution stride must be >= 1");
}

void check_rank4(const Shape& s, const char* what) {
  require(s.size() == 4, ErrorKind::dimension, std::string(what) + " must be rank 4, got " + shape_string(s));
}

Layout conv_layout(const Shape& input, const Shape& kernel, const ConvGeometry& g) {
  const std::size_t kh = kernel[2], kw = kernel[3];
  return Layout{input[1],
                input[2],
                input[3],
                kh,
                kw,
                conv_out_size(input[2], kh, g.stride, g.pad.top, g.pad.bottom),
                conv_out_size(input[3], kw, g.stride, g.pad.left, g.pad.right),
                g.stride,
                g.pad.top,
                g.pad.left};
}

// Transposed conv: the output is the image side, the input is the grid side.
Layout transpose_layout(const Shape& input, const Shape& kernel, const ConvGeometry& g) {
  const std::size_t kh = kernel[2], kw = kernel[3];
  return Layout{kernel[1],
                conv_transpose_out_size(input[2], kh, g.stride, g.pad.top, g.pad.bottom, g.output_padding),
                conv_transpose_out_size(input[3], kw, g.stride, g.pad.left, g.pad.right, g.output_padding),
                kh,
                kw,
                input[2],
                input[3],
                g.stride,
                g.pad.top,
                g.pad.left};
}

}  // namespace

Padding same_padding(std::size_t in_h, std::size_t in_w, std::size_t kh, std::size_t kw, std::size_t stride) {
  auto split = [&](std::size_t in, std::size_t k) {
    const std::size_t out = (in + stride - 1) / stride;
    const long total = static_cast<long>((out - 1) * stride + k) - static_cast<long>(in);
    const std::size_t t = total > 0 ? static_cast<std::size_t>(total) : 0;
    return std::pair<std::size_t, std::size_t>{t / 2, t - t / 2};
  };
  auto [top, bottom] = split(in_h, kh);
  auto [left, right] = split(in_w, kw);
  return {top, left, bottom, right};
}

std::size_t conv_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad_lo, std::size_t pad_hi) {
  require(stride >= 1, ErrorKind::config, "convolution stride must be >= 1");
  const std::size_t padded = in + pad_lo + pad_hi;
  require(k >= 1 && k <= padded, ErrorKind::dimension,
          "kernel size " + std::to_string(k) + " exceeds padded input " + std::to_string(padded));
  return (padded - k) / stride + 1;
}

std::size_t conv_transpose_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad_lo,
                                    std::size_t pad_hi, std::size_t output_padding) {
  require(stride >= 1, ErrorKind::config, "convolution stride must be >= 1");
  require(output_padding < stride, ErrorKind::config, "output padding must be smaller than the stride");
  const long out = static_cast<long>((in - 1) * stride + k + output_padding) - static_cast<long>(pad_lo + pad_hi);
  require(out >= 1, ErrorKind::dimension, "transposed convolution padding exceeds output size");
  return static_cast<std::size_t>(out);
}

Shape conv2d_shape(const Shape& input, const Shape& kernel, const ConvGeometry& geom) {
  check_geometry(geom);
  check_rank4(input, "conv2d input");
  check_rank4(kernel, "conv2d kernel");
  require(kernel[1] == input[1], ErrorKind::dimension,
          "conv2d kernel expects " + std::to_string(kernel[1]) + " channels, input has " + std::to_string(input[1]));
  const Layout l = conv_layout(input, kernel, geom);
  return {input[0], kernel[0], l.grid_h, l.grid_w};
}

Shape conv2d_transpose_shape(const Shape& input, const Shape& kernel, const ConvGeometry& geom) {
  check_geometry(geom);
  check_rank4(input, "conv2d_transpose input");
  check_rank4(kernel, "conv2d_transpose kernel");
  require(kernel[0] == input[1], ErrorKind::dimension,
          "conv2d_transpose kernel expects " + std::to_string(kernel[0]) + " channels, input has " +
              std::to_string(input[1]));
  const Layout l = transpose_layout(input, kernel, geom);
  return {input[0], kernel[1], l.img_h, l.img_w};
}

template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const ConvGeometry& geom) {
  Tensor<T> out(conv2d_shape(input.shape(), kernel.shape(), geom));
  require_finite(input, "conv2d input");
  const Layout l = conv_layout(input.shape(), kernel.shape(), geom);
  const std::size_t batch = input.dim(0), filters = kernel.dim(0);
  const std::size_t in_stride = l.channels * l.img_h * l.img_w, out_stride = filters * l.col_cols();
  ConstMapMat<T> k(kernel.ptr(), filters, l.col_rows());
  parallel_for(batch, [&](std::size_t b) {
    T* cols = scratch<T>(l.col_rows() * l.col_cols(), 0);
    im2col(input.ptr() + b * in_stride, l, cols);
    MapMat<T> y(out.ptr() + b * out_stride, filters, l.col_cols());
    y.noalias() = k * ConstMapMat<T>(cols, l.col_rows(), l.col_cols());
  });
  return out;
}

template <class T>
Tensor<T> conv2d_backward_input(const Tensor<T>& grad_out, const Tensor<T>& kernel, const Shape& input_shape,
                                const ConvGeometry& geom) {
  const Layout l = conv_layout(input_shape, kernel.shape(), geom);
  Tensor<T> grad_in(input_shape);
  const std::size_t batch = input_shape[0], filters = kernel.dim(0);
  const std::size_t in_stride = l.channels * l.img_h * l.img_w, out_stride = filters * l.col_cols();
  ConstMapMat<T> k(kernel.ptr(), filters, l.col_rows());
  parallel_for(batch, [&](std::size_t b) {
    MapMat<T> cols(scratch<T>(l.col_rows() * l.col_cols(), 0), l.col_rows(), l.col_cols());
    cols.noalias() = k.transpose() * ConstMapMat<T>(grad_out.ptr() + b * out_stride, filters, l.col_cols());
    col2im(cols.data(), l, grad_in.ptr() + b * in_stride);
  });
  return grad_in;
}

template <class T>
Tensor<T> conv2d_backward_kernel(const Tensor<T>& grad_out, const Tensor<T>& input, const Shape& kernel_shape,
                                 const ConvGeometry& geom) {
  const Layout l = conv_layout(input.shape(), kernel_shape, geom);
  const std::size_t batch = input.dim(0), filters = kernel_shape[0];
  const std::size_t in_stride = l.channels * l.img_h * l.img_w, out_stride = filters * l.col_cols();
  Tensor<T> grad_k(kernel_shape);
  accumulate_outer(grad_out.ptr(), out_stride, filters, input.ptr(), in_stride, l, batch, grad_k.ptr());
  return grad_k;
}

template <class T>
Tensor<T> conv2d_transpose_forward(const Tensor<T>& input, const Tensor<T>& kernel, const ConvGeometry& geom) {
  Tensor<T> out(conv2d_transpose_shape(input.shape(), kernel.shape(), geom));
  require_finite(input, "conv2d_transpose input");
  const Layout l = transpose_layout(input.shape(), kernel.shape(), geom);
  const std::size_t batch = input.dim(0), in_ch = kernel.dim(0);
  const std::size_t in_stride = in_ch * l.col_cols(), out_stride = l.channels * l.img_h * l.img_w;
  ConstMapMat<T> k(kernel.ptr(), in_ch, l.col_rows());
  parallel_for(batch, [&](std::size_t b) {
    MapMat<T> cols(scratch<T>(l.col_rows() * l.col_cols(), 0), l.col_rows(), l.col_cols());
    cols.noalias() = k.transpose() * ConstMapMat<T>(input.ptr() + b * in_stride, in_ch, l.col_cols());
    col2im(cols.data(), l, out.ptr() + b * out_stride);
  });
  return out;
}

template <class T>
Tensor<T> conv2d_transpose_backward_kernel(const Tensor<T>& grad_out, const Tensor<T>& input,
                                           const Shape& kernel_shape, const ConvGeometry& geom) {
  const Layout l = transpose_layout(input.shape(), kernel_shape, geom);
  const std::size_t batch = input.dim(0), in_ch = kernel_shape[0];
  const std::size_t in_stride = in_ch * l.col_cols(), out_stride = l.channels * l.img_h * l.img_w;
  Tensor<T> grad_k(kernel_shape);
  accumulate_outer(input.ptr(), in_stride, in_ch, grad_out.ptr(), out_stride, l, batch, grad_k.ptr());
  return grad_k;
}

#define PF_INSTANTIATE_CONV(T)                                                                                  \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const ConvGeometry&);                  \
  template Tensor<T> conv2d_backward_input(const Tensor<T>&, const Tensor<T>&, const Shape&, const ConvGeometry&); \
  template Tensor<T> conv2d_backward_kernel(const Tensor<T>&, const Tensor<T>&, const Shape&,                   \
                                            const ConvGeometry&);                                              \
  template Tensor<T> conv2d_transpose_forward(const Tensor<T>&, const Tensor<T>&, const ConvGeometry&);        \
  template Tensor<T> conv2d_transpose_backward_kernel(const Tensor<T>&, const Tensor<T>&, const Shape&,         \
                                                      const ConvGeometry&);

PF_INSTANTIATE_CONV(float)
PF_INSTANTIATE_CONV(double)

}  // namespace pf
