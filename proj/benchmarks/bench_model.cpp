#include <benchmark/benchmark.h>

#include "bdekit/brnet.hpp"
#include "bdekit/rng.hpp"

using namespace bdekit;

namespace {

ImageBuffer random_image(Rng& rng, int w, int h) {
    ImageBuffer img(w, h, 8);
    for (auto& v : img.data)
        v = static_cast<int32_t>(rng.uniform_int(0, 255));
    return img;
}

void model_restore(benchmark::State& state) {
    ModelConfig cfg;
    cfg.base_filters = static_cast<int>(state.range(0));
    cfg.opt_steps = {1, 1, 2};
    const BrNet<float> model(cfg, 1);
    Rng rng(5);
    const BitSpec spec{8, 4};
    const ImageBuffer lbd = degrade(random_image(rng, 96, 96), spec);
    for (auto _ : state) {
        ImageBuffer out = model.restore(lbd, spec);
        benchmark::DoNotOptimize(out.data.data());
    }
}

void model_training_step(benchmark::State& state) {
    ModelConfig mc;
    mc.base_filters = static_cast<int>(state.range(0));
    mc.opt_steps = {1, 1, 2};
    BrNet<float> model(mc, 2);
    nn::AdamState<float> adam;
    adam.learning_rate = 1e-3f;

    Rng rng(6);
    const BitSpec spec{8, 4};
    const ImageBuffer original = random_image(rng, 64, 64);
    const ImageBuffer lbd = degrade(original, spec);
    const ImageBuffer lbds[1] = {lbd};
    const BitSpec specs[1] = {spec};
    const WeightingMap targets[1] = {exact_weighting(original, lbd, spec)};

    for (auto _ : state) {
        auto w = model.forward_map(model.make_input(lbds, specs));
        std::vector<float> t(w.numel());
        for (size_t i = 0; i < t.size(); ++i)
            t[i] = targets[0].data[i % targets[0].data.size()];
        auto loss = nn::l1_loss(
            w, nn::Tensor4<float>::from_vector(w.shape(), std::move(t)));
        model.params().zero_grad();
        nn::backward(loss);
        nn::adam_step(model.params(), adam);
        benchmark::DoNotOptimize(loss.item());
    }
}

} // namespace

BENCHMARK(model_restore)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(model_training_step)->Arg(16)->Unit(benchmark::kMillisecond);
