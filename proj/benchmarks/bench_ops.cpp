#include <benchmark/benchmark.h>

#include "bdekit/nn_ops.hpp"
#include "bdekit/rng.hpp"

using namespace bdekit;
using nn::Tensor4;

namespace {

Tensor4<float> random_tensor(Rng& rng, nn::Shape4 shape) {
    std::vector<float> v(shape.numel());
    for (auto& x : v) x = static_cast<float>(rng.uniform_real(-1.0, 1.0));
    return Tensor4<float>::from_vector(shape, std::move(v));
}

void conv_forward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    Rng rng(1);
    const auto x = random_tensor(rng, {1, c, 64, 64});
    const auto w = random_tensor(rng, {c, c, 3, 3});
    const auto b = random_tensor(rng, {1, c, 1, 1});
    for (auto _ : state) {
        auto y = nn::conv2d(x, w, b, 1);
        benchmark::DoNotOptimize(y.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 64 * 64 * c * c * 9);
}

void conv_backward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    Rng rng(2);
    for (auto _ : state) {
        state.PauseTiming();
        auto x = random_tensor(rng, {1, c, 64, 64});
        x.node()->requires_grad = true;
        const auto w = random_tensor(rng, {c, c, 3, 3});
        const auto b = random_tensor(rng, {1, c, 1, 1});
        auto loss = nn::l1_loss(nn::conv2d(x, w, b, 1),
                                Tensor4<float>::zeros({1, c, 64, 64}));
        state.ResumeTiming();
        nn::backward(loss);
        benchmark::DoNotOptimize(x.grad().data());
    }
}

void maxpool(benchmark::State& state) {
    Rng rng(3);
    const auto x = random_tensor(rng, {1, 64, 96, 96});
    for (auto _ : state) {
        auto y = nn::maxpool2(x);
        benchmark::DoNotOptimize(y.values().data());
    }
}

void shuffle_roundtrip(benchmark::State& state) {
    Rng rng(4);
    const auto x = random_tensor(rng, {1, 64, 48, 48});
    for (auto _ : state) {
        auto y = nn::space_to_depth(nn::pixel_shuffle(x, 2), 2);
        benchmark::DoNotOptimize(y.values().data());
    }
}

} // namespace

BENCHMARK(conv_forward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_backward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(maxpool)->Unit(benchmark::kMicrosecond);
BENCHMARK(shuffle_roundtrip)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
