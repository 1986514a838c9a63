#include <algorithm>
#include <vector>

#include <omp.h>

#include "unmix3d/kernels.hpp"

namespace unmix3d::kernels {

int conv_output_extent(int input, int kernel, int stride, int pad) {
  if (stride < 1 || pad < 0) throw DimensionError("conv: stride must be >= 1 and padding >= 0");
  const int span = input + 2 * pad - kernel;
  if (span < 0) throw DimensionError("conv: kernel larger than padded input");
  return span / stride + 1;
}

void set_thread_count(int threads) {
  omp_set_num_threads(threads > 0 ? threads : omp_get_num_procs());
}

int thread_count() { return omp_get_max_threads(); }

namespace {

// Output indices o in [0, n_out) whose input index o - pad + tap is in [0, n_in).
struct Range {
  int begin;
  int end;
};
Range valid_outputs(int n_out, int n_in, int pad, int tap) {
  return {std::max(0, pad - tap), std::min(n_out, n_in + pad - tap)};
}

}  // namespace

Tensor4 conv3d(const Tensor4& in, const ConvKernel& k, const ConvGeometry& g) {
  if (in.channels() != k.in_channels()) throw DimensionError("conv3d: channel mismatch");
  const int od_n = conv_output_extent(in.depth(), k.kd(), g.stride_d, g.pad_d);
  const int oh_n = conv_output_extent(in.height(), k.kh(), 1, g.pad_h);
  const int ow_n = conv_output_extent(in.width(), k.kw(), 1, g.pad_w);
  Tensor4 out(k.out_channels(), od_n, oh_n, ow_n);
  const int c_out = k.out_channels();

#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < c_out; ++co) {
    for (int od = 0; od < od_n; ++od) {
      for (int ci = 0; ci < k.in_channels(); ++ci) {
        for (int t = 0; t < k.kd(); ++t) {
          const int id = od * g.stride_d - g.pad_d + t;
          if (id < 0 || id >= in.depth()) continue;
          for (int y = 0; y < k.kh(); ++y) {
            const Range rows = valid_outputs(oh_n, in.height(), g.pad_h, y);
            for (int x = 0; x < k.kw(); ++x) {
              const double w = k(co, ci, t, y, x);
              const Range cols = valid_outputs(ow_n, in.width(), g.pad_w, x);
              const int shift = x - g.pad_w;
              for (int oh = rows.begin; oh < rows.end; ++oh) {
                const double* __restrict src = in.row(ci, id, oh - g.pad_h + y) + shift;
                double* __restrict dst = out.row(co, od, oh);
                for (int ow = cols.begin; ow < cols.end; ++ow) dst[ow] += w * src[ow];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor4 conv3d_transpose(const Tensor4& go, const ConvKernel& k, const ConvGeometry& g,
                         int depth, int height, int width) {
  if (go.channels() != k.out_channels()) throw DimensionError("conv3d_transpose: channel mismatch");
  if (conv_output_extent(depth, k.kd(), g.stride_d, g.pad_d) != go.depth() ||
      conv_output_extent(height, k.kh(), 1, g.pad_h) != go.height() ||
      conv_output_extent(width, k.kw(), 1, g.pad_w) != go.width()) {
    throw DimensionError("conv3d_transpose: output extents inconsistent with geometry");
  }
  Tensor4 out(k.in_channels(), depth, height, width);
  const int c_in = k.in_channels();

#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c_in; ++ci) {
    for (int id = 0; id < depth; ++id) {
      for (int co = 0; co < go.channels(); ++co) {
        for (int t = 0; t < k.kd(); ++t) {
          const int num = id + g.pad_d - t;
          if (num < 0 || num % g.stride_d != 0) continue;
          const int od = num / g.stride_d;
          if (od >= go.depth()) continue;
          for (int y = 0; y < k.kh(); ++y) {
            // ih = oh - pad_h + y for the forward map.
            const int ih_begin = std::max(0, y - g.pad_h);
            const int ih_end = std::min(height, go.height() - g.pad_h + y);
            for (int x = 0; x < k.kw(); ++x) {
              const double w = k(co, ci, t, y, x);
              const int iw_begin = std::max(0, x - g.pad_w);
              const int iw_end = std::min(width, go.width() - g.pad_w + x);
              const int shift = g.pad_w - x;
              for (int ih = ih_begin; ih < ih_end; ++ih) {
                const double* __restrict src = go.row(co, od, ih + g.pad_h - y) + shift;
                double* __restrict dst = out.row(ci, id, ih);
                for (int iw = iw_begin; iw < iw_end; ++iw) dst[iw] += w * src[iw];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

ConvKernel conv3d_kernel_grad(const Tensor4& in, const Tensor4& go, const ConvGeometry& g,
                              int kd, int kh, int kw) {
  ConvKernel dk(go.channels(), in.channels(), kd, kh, kw);
  const int c_out = go.channels();
  const int c_in = in.channels();
  const int ow_n = go.width();

#pragma omp parallel for collapse(3) schedule(static)
  for (int co = 0; co < c_out; ++co) {
    for (int ci = 0; ci < c_in; ++ci) {
      for (int t = 0; t < kd; ++t) {
        // One lane per output column; lanes are summed in order at the end so
        // the result is independent of scheduling.
        std::vector<double> acc(static_cast<std::size_t>(kh) * kw * ow_n, 0.0);
        for (int od = 0; od < go.depth(); ++od) {
          const int id = od * g.stride_d - g.pad_d + t;
          if (id < 0 || id >= in.depth()) continue;
          for (int y = 0; y < kh; ++y) {
            const Range rows = valid_outputs(go.height(), in.height(), g.pad_h, y);
            for (int oh = rows.begin; oh < rows.end; ++oh) {
              const double* __restrict grow = go.row(co, od, oh);
              const double* __restrict irow = in.row(ci, id, oh - g.pad_h + y);
              for (int x = 0; x < kw; ++x) {
                const Range cols = valid_outputs(ow_n, in.width(), g.pad_w, x);
                double* __restrict lane = acc.data() + static_cast<std::size_t>(y * kw + x) * ow_n;
                const double* __restrict src = irow + (x - g.pad_w);
                for (int ow = cols.begin; ow < cols.end; ++ow) lane[ow] += grow[ow] * src[ow];
              }
            }
          }
        }
        for (int y = 0; y < kh; ++y)
          for (int x = 0; x < kw; ++x) {
            const double* lane = acc.data() + static_cast<std::size_t>(y * kw + x) * ow_n;
            double sum = 0.0;
            for (int ow = 0; ow < ow_n; ++ow) sum += lane[ow];
            dk(co, ci, t, y, x) = sum;
          }
      }
    }
  }
  return dk;
}

}  // namespace unmix3d::kernels
