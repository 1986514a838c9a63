// Reference vs OpenMP convolution kernels on network-sized shapes
// (L=120, 32x32, P=4, C=16 by default).

#include <random>

#include <benchmark/benchmark.h>

#include "unmix3d/cscnet.hpp"
#include "unmix3d/kernels.hpp"

namespace {

using namespace unmix3d;

struct Shapes {
  NetworkConfig net = make_config(120, 32, 32, 4, 16, 6);
  Tensor4 y{1, net.bands, net.height, net.width};
  Tensor4 z{net.channels, net.materials, net.height, net.width};
  ConvKernel k{net.channels, 1, NetworkConfig::kUpdateDepth, 3, 3};

  Shapes() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : y.values()) v = u(rng);
    for (double& v : z.values()) v = u(rng);
    for (double& v : k.values()) v = u(rng);
  }
};

const Shapes& shapes() {
  static const Shapes s;
  return s;
}

void BM_Conv3dReference(benchmark::State& state) {
  const Shapes& s = shapes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::reference::conv3d(s.y, s.k, s.net.update_geometry()));
  }
}

void BM_Conv3dParallel(benchmark::State& state) {
  const Shapes& s = shapes();
  kernels::set_thread_count(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::conv3d(s.y, s.k, s.net.update_geometry()));
  }
  kernels::set_thread_count(0);
}

void BM_TransposeReference(benchmark::State& state) {
  const Shapes& s = shapes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::reference::conv3d_transpose(
        s.z, s.k, s.net.update_geometry(), s.net.bands, s.net.height, s.net.width));
  }
}

void BM_TransposeParallel(benchmark::State& state) {
  const Shapes& s = shapes();
  kernels::set_thread_count(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::conv3d_transpose(s.z, s.k, s.net.update_geometry(),
                                                       s.net.bands, s.net.height, s.net.width));
  }
  kernels::set_thread_count(0);
}

void BM_KernelGradReference(benchmark::State& state) {
  const Shapes& s = shapes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::reference::conv3d_kernel_grad(
        s.y, s.z, s.net.update_geometry(), NetworkConfig::kUpdateDepth, 3, 3));
  }
}

void BM_KernelGradParallel(benchmark::State& state) {
  const Shapes& s = shapes();
  kernels::set_thread_count(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::conv3d_kernel_grad(s.y, s.z, s.net.update_geometry(),
                                                         NetworkConfig::kUpdateDepth, 3, 3));
  }
  kernels::set_thread_count(0);
}

}  // namespace

BENCHMARK(BM_Conv3dReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv3dParallel)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransposeReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TransposeParallel)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelGradReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelGradParallel)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
