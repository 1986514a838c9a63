#include "unmix3d/kernels.hpp"

// Direct six-nested-loop forms. Slow; used as the oracle for the parallel
// kernels and as the baseline in the benchmark.

namespace unmix3d::kernels::reference {

Tensor4 conv3d(const Tensor4& in, const ConvKernel& k, const ConvGeometry& g) {
  if (in.channels() != k.in_channels()) throw DimensionError("conv3d: channel mismatch");
  const int od_n = conv_output_extent(in.depth(), k.kd(), g.stride_d, g.pad_d);
  const int oh_n = conv_output_extent(in.height(), k.kh(), 1, g.pad_h);
  const int ow_n = conv_output_extent(in.width(), k.kw(), 1, g.pad_w);
  Tensor4 out(k.out_channels(), od_n, oh_n, ow_n);
  for (int co = 0; co < k.out_channels(); ++co)
    for (int od = 0; od < od_n; ++od)
      for (int oh = 0; oh < oh_n; ++oh)
        for (int ow = 0; ow < ow_n; ++ow) {
          double sum = 0.0;
          for (int ci = 0; ci < k.in_channels(); ++ci)
            for (int t = 0; t < k.kd(); ++t)
              for (int y = 0; y < k.kh(); ++y)
                for (int x = 0; x < k.kw(); ++x) {
                  const int id = od * g.stride_d - g.pad_d + t;
                  const int ih = oh - g.pad_h + y;
                  const int iw = ow - g.pad_w + x;
                  if (id < 0 || id >= in.depth() || ih < 0 || ih >= in.height() || iw < 0 ||
                      iw >= in.width())
                    continue;
                  sum += k(co, ci, t, y, x) * in(ci, id, ih, iw);
                }
          out(co, od, oh, ow) = sum;
        }
  return out;
}

Tensor4 conv3d_transpose(const Tensor4& go, const ConvKernel& k, const ConvGeometry& g,
                         int depth, int height, int width) {
  if (go.channels() != k.out_channels()) throw DimensionError("conv3d_transpose: channel mismatch");
  Tensor4 out(k.in_channels(), depth, height, width);
  for (int co = 0; co < go.channels(); ++co)
    for (int od = 0; od < go.depth(); ++od)
      for (int oh = 0; oh < go.height(); ++oh)
        for (int ow = 0; ow < go.width(); ++ow) {
          const double v = go(co, od, oh, ow);
          for (int ci = 0; ci < k.in_channels(); ++ci)
            for (int t = 0; t < k.kd(); ++t)
              for (int y = 0; y < k.kh(); ++y)
                for (int x = 0; x < k.kw(); ++x) {
                  const int id = od * g.stride_d - g.pad_d + t;
                  const int ih = oh - g.pad_h + y;
                  const int iw = ow - g.pad_w + x;
                  if (id < 0 || id >= depth || ih < 0 || ih >= height || iw < 0 || iw >= width)
                    continue;
                  out(ci, id, ih, iw) += k(co, ci, t, y, x) * v;
                }
        }
  return out;
}

ConvKernel conv3d_kernel_grad(const Tensor4& in, const Tensor4& go, const ConvGeometry& g,
                              int kd, int kh, int kw) {
  ConvKernel dk(go.channels(), in.channels(), kd, kh, kw);
  for (int co = 0; co < go.channels(); ++co)
    for (int ci = 0; ci < in.channels(); ++ci)
      for (int t = 0; t < kd; ++t)
        for (int y = 0; y < kh; ++y)
          for (int x = 0; x < kw; ++x) {
            double sum = 0.0;
            for (int od = 0; od < go.depth(); ++od)
              for (int oh = 0; oh < go.height(); ++oh)
                for (int ow = 0; ow < go.width(); ++ow) {
                  const int id = od * g.stride_d - g.pad_d + t;
                  const int ih = oh - g.pad_h + y;
                  const int iw = ow - g.pad_w + x;
                  if (id < 0 || id >= in.depth() || ih < 0 || ih >= in.height() || iw < 0 ||
                      iw >= in.width())
                    continue;
                  sum += go(co, od, oh, ow) * in(ci, id, ih, iw);
                }
            dk(co, ci, t, y, x) = sum;
          }
  return dk;
}

}  // namespace unmix3d::kernels::reference
