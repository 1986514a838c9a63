#pragma once

// Convolution kernels used by the network. Each operation has a parallel
// implementation (OpenMP over independent output planes, fixed per-voxel
// reduction order, so results do not depend on the thread count) and a naive
// reference in `kernels::reference` that is kept for tests and benchmarks.

#include "unmix3d/tensor.hpp"

namespace unmix3d::kernels {

// Output extent along one axis; throws DimensionError when < 1.
int conv_output_extent(int input, int kernel, int stride, int pad);

// Cross-correlation without bias, zero padding.
// input: Cin x D x H x W, kernel: Cout x Cin x kd x kh x kw.
Tensor4 conv3d(const Tensor4& input, const ConvKernel& kernel, const ConvGeometry& g);

// Exact adjoint of conv3d for an input of the given extents: the transposed
// convolution. grad_output: Cout x D' x H' x W'; result Cin x depth x height x width.
Tensor4 conv3d_transpose(const Tensor4& grad_output, const ConvKernel& kernel,
                         const ConvGeometry& g, int depth, int height, int width);

// d<conv3d(input, k), grad_output>/dk.
ConvKernel conv3d_kernel_grad(const Tensor4& input, const Tensor4& grad_output,
                              const ConvGeometry& g, int kd, int kh, int kw);

namespace reference {

Tensor4 conv3d(const Tensor4& input, const ConvKernel& kernel, const ConvGeometry& g);
Tensor4 conv3d_transpose(const Tensor4& grad_output, const ConvKernel& kernel,
                         const ConvGeometry& g, int depth, int height, int width);
ConvKernel conv3d_kernel_grad(const Tensor4& input, const Tensor4& grad_output,
                              const ConvGeometry& g, int kd, int kh, int kw);

}  // namespace reference

// Thread-count control shared by every OpenMP region in the library.
// 0 restores the runtime default (all cores).
void set_thread_count(int threads);
int thread_count();

}  // namespace unmix3d::kernels
