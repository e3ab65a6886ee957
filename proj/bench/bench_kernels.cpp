#include <benchmark/benchmark.h>

#include "levelset/kernels.hpp"
#include "levelset/netcore.hpp"
#include "levelset/serial.hpp"
#include "levelset/tasks.hpp"

using namespace levelset;

namespace {

const Dataset& poly_data() {
    static const Dataset d = tasks::gen_poly(2, 1 << 16, 1);
    return d;
}

const ParamVector& poly_params() {
    static const ParamVector p = init_params(ArchSpec::uniform({1, 16, 16, 1}, Activation::relu, true), 1);
    return p;
}

void BM_LossGradSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(serial::grad(poly_params(), poly_data(), {}));
}

void BM_LossGradParallel(benchmark::State& state) {
    set_max_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(poly_params(), poly_data(), {}));
    set_max_threads(0);
}

void BM_KernelSerial(benchmark::State& state) {
    const Vector w1 = Vector::Unit(8, 0);
    const Vector w2 = Vector::Unit(8, 1);
    const auto s = kernels::Sampler::gaussian(8);
    for (auto _ : state) benchmark::DoNotOptimize(serial::relu_kernel_mc(w1, w2, s, 1 << 18, 3));
}

void BM_KernelParallel(benchmark::State& state) {
    const Vector w1 = Vector::Unit(8, 0);
    const Vector w2 = Vector::Unit(8, 1);
    const auto s = kernels::Sampler::gaussian(8);
    set_max_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::relu_kernel_mc(w1, w2, s, 1 << 18, 3));
    set_max_threads(0);
}

}  // namespace

BENCHMARK(BM_LossGradSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossGradParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KernelParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
