#include <benchmark/benchmark.h>

#include "bdekit/bitdepth.hpp"
#include "bdekit/metrics.hpp"
#include "bdekit/rng.hpp"

using namespace bdekit;

namespace {

ImageBuffer random_image(Rng& rng, int w, int h) {
    ImageBuffer img(w, h, 8);
    for (auto& v : img.data)
        v = static_cast<int32_t>(rng.uniform_int(0, 255));
    return img;
}

void metric_psnr(benchmark::State& state) {
    Rng rng(7);
    const ImageBuffer a = random_image(rng, 512, 512);
    const ImageBuffer b = degrade(a, BitSpec{8, 4});
    for (auto _ : state) benchmark::DoNotOptimize(psnr(a, b));
}

void metric_ssim(benchmark::State& state) {
    Rng rng(8);
    const ImageBuffer a = random_image(rng, 512, 512);
    const ImageBuffer b = degrade(a, BitSpec{8, 4});
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}

void metric_wdis(benchmark::State& state) {
    Rng rng(9);
    const ImageBuffer a = random_image(rng, 512, 512);
    const ImageBuffer b = degrade(a, BitSpec{8, 4});
    for (auto _ : state) benchmark::DoNotOptimize(wdis(a, b));
}

void degrade_image(benchmark::State& state) {
    Rng rng(10);
    const ImageBuffer a = random_image(rng, 512, 512);
    const BitSpec spec{8, 4};
    for (auto _ : state) {
        ImageBuffer out = degrade(a, spec);
        benchmark::DoNotOptimize(out.data.data());
    }
}

} // namespace

BENCHMARK(metric_psnr)->Unit(benchmark::kMicrosecond);
BENCHMARK(metric_ssim)->Unit(benchmark::kMillisecond);
BENCHMARK(metric_wdis)->Unit(benchmark::kMicrosecond);
BENCHMARK(degrade_image)->Unit(benchmark::kMicrosecond);
