#ifndef BDEKIT_BRNET_HPP
#define BDEKIT_BRNET_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>

#include "bdekit/bitdepth.hpp"
#include "bdekit/image.hpp"
#include "bdekit/nn_ops.hpp"
#include "bdekit/param_store.hpp"
#include "bdekit/rng.hpp"

namespace bdekit {

/// Architecture description. Serialized as key=value text and embedded in
/// checkpoints, so a saved model carries its own shape.
struct ModelConfig {
    int max_bits = 8;     // native depth of restored images: 8 (SDR) or 16 (HDR)
    int base_filters = 64;
    std::array<int, 3> opt_steps{1, 1, 6}; // optimization steps per encoder stage
    int output_groups = 1;                 // 1 for SDR, 2 for HDR

    void validate() const;
    std::string to_text() const;
    static ModelConfig from_text(const std::string& text);

    /// Convenience for tests and tools: a config with groups tied to depth.
    static ModelConfig make(int max_bits, int filters,
                            std::array<int, 3> steps);
};

/// Weighting-map restoration network: a UNet-shaped encoder/decoder whose
/// encoder stages unroll an optimization scheme (a Runge-Kutta step followed
/// by a proximal step, repeated), and whose head squashes features to a
/// per-pixel weight in (0,1) over the missing-bit range.
template <typename T>
class BrNet {
public:
    explicit BrNet(ModelConfig config, uint64_t seed = 0)
        : config_(config) {
        config_.validate();
        Rng rng(mix_seed(seed, 0x62726e6574ULL)); // parameter-init stream
        build(rng);
    }

    const ModelConfig& config() const { return config_; }
    nn::ParamStore<T>& params() { return params_; }
    const nn::ParamStore<T>& params() const { return params_; }

    /// Assembles the normalized 6-channel network input for a batch of
    /// equally sized degraded images, one bit spec per image: channels 0-2
    /// are the image over 2^max_bits - 1, channels 3-5 a constant plane
    /// carrying the residual bound on the same scale.
    nn::Tensor4<T> make_input(std::span<const ImageBuffer> lbds,
                              std::span<const BitSpec> specs) const {
        if (lbds.empty() || lbds.size() != specs.size())
            throw ShapeError("make_input: need one bit spec per image");
        const ImageBuffer& first = lbds[0];
        first.validate();
        const int h = first.height, w = first.width;
        const T denom = static_cast<T>((1 << config_.max_bits) - 1);
        auto input = nn::Tensor4<T>::zeros(
            {static_cast<int>(lbds.size()), 6, h, w});
        T* out = input.values().data();
        for (size_t i = 0; i < lbds.size(); ++i) {
            const ImageBuffer& img = lbds[i];
            img.validate();
            specs[i].validate();
            if (img.width != w || img.height != h || img.channels != 3)
                throw ShapeError("make_input: images in a batch must share "
                                 "one 3-channel shape");
            if (img.max_bits != config_.max_bits ||
                specs[i].max_bits != config_.max_bits)
                throw BitSpecError("make_input: image depth does not match "
                                   "the model's max_bits");
            const size_t plane = static_cast<size_t>(h) * w;
            T* sample = out + i * 6 * plane;
            for (int c = 0; c < 3; ++c)
                for (size_t p = 0; p < plane; ++p)
                    sample[c * plane + p] =
                        static_cast<T>(img.data[p * 3 + c]) / denom;
            const T bound =
                static_cast<T>(residual_bound(specs[i]).value) / denom;
            std::fill(sample + 3 * plane, sample + 6 * plane, bound);
        }
        return input;
    }

    /// Full network: 6-channel input batch to a 3-channel weighting map
    /// with the same spatial size. Spatial dims must be divisible by 4
    /// (two pooling stages); callers pad and crop around this.
    nn::Tensor4<T> forward_map(const nn::Tensor4<T>& input) const {
        const nn::Shape4 s = input.shape();
        if (s.c != 6)
            throw ShapeError("forward_map expects 6 input channels, got " +
                             std::to_string(s.c));
        if (s.h % 4 != 0 || s.w % 4 != 0)
            throw ShapeError("forward_map: spatial dims " + s.str() +
                             " must be divisible by 4");
        auto f0 = conv3("input_conv", input);
        auto e1 = optblock_forward(1, f0);
        auto e2 = optblock_forward(2, nn::maxpool2(e1));
        auto e3 = optblock_forward(3, nn::maxpool2(e2));
        auto d1 = fuse_forward("dec1", e3, e2);
        auto d2 = fuse_forward("dec2", d1, e1);
        auto w = output_group("out1", d2);
        if (config_.output_groups == 2) {
            // coarse map restores the high byte of the residual, fine map
            // the low byte
            auto fine = output_group("out2", d2);
            w = nn::clamp01(nn::add(w, nn::scale(fine, T(1) / T(256))));
        }
        return w;
    }

    /// Proximal block: f + Conv(ReLU(Conv(ReLU(Conv(f))))).
    nn::Tensor4<T> prox_forward(const std::string& prefix,
                                const nn::Tensor4<T>& f) const {
        auto y = conv3(prefix + ".conv1", f);
        y = conv3(prefix + ".conv2", nn::relu(y));
        y = conv3(prefix + ".conv3", nn::relu(y));
        return nn::add(f, y);
    }

    /// Classic fourth-order Runge-Kutta step with learned stage functions:
    /// K1 = G1(f), K2 = G2(f + (h/2)K1), K3 = G3(f + (h/2)K2),
    /// K4 = G4(f + hK3), output = f + (h/6)(K1 + 2K2 + 2K3 + K4).
    nn::Tensor4<T> rk4_forward(const std::string& prefix,
                               const nn::Tensor4<T>& f) const {
        auto h = params_.at(prefix + ".h");
        auto half_h = nn::scale(h, T(0.5));
        auto k1 = g_forward(prefix + ".g1", f);
        auto k2 = g_forward(prefix + ".g2",
                            nn::add(f, nn::scale_by(k1, half_h)));
        auto k3 = g_forward(prefix + ".g3",
                            nn::add(f, nn::scale_by(k2, half_h)));
        auto k4 = g_forward(prefix + ".g4", nn::add(f, nn::scale_by(k3, h)));
        auto sum = nn::add(nn::add(k1, k4),
                           nn::scale(nn::add(k2, k3), T(2)));
        return nn::add(f, nn::scale_by(sum, nn::scale(h, T(1) / T(6))));
    }

    /// Residual block: f + Conv(ReLU(Conv(f))).
    nn::Tensor4<T> resblock_forward(const std::string& prefix,
                                    const nn::Tensor4<T>& f) const {
        auto y = conv3(prefix + ".conv2", nn::relu(conv3(prefix + ".conv1", f)));
        return nn::add(f, y);
    }

    /// One encoder stage: opt_steps pairs of (RK-4 step, proximal step),
    /// then a trailing residual block.
    nn::Tensor4<T> optblock_forward(int stage, const nn::Tensor4<T>& f) const {
        if (stage < 1 || stage > 3)
            throw InternalError("optblock stage out of range");
        const std::string prefix = "enc" + std::to_string(stage);
        auto y = f;
        for (int step = 0; step < config_.opt_steps[stage - 1]; ++step) {
            const std::string sp = prefix + ".step" + std::to_string(step);
            y = prox_forward(sp + ".prox", rk4_forward(sp + ".rk4", y));
        }
        return resblock_forward(prefix + ".tail", y);
    }

    /// Weighting map for one image, reflect-padding to a multiple of 4 and
    /// cropping back. Values clamped to [0,1] on extraction.
    WeightingMap weighting_map(const ImageBuffer& lbd,
                               const BitSpec& spec) const {
        const ImageBuffer padded = pad_to_multiple(lbd, 4);
        const BitSpec specs[1] = {spec};
        const ImageBuffer imgs[1] = {padded};
        auto out = forward_map(make_input(imgs, specs));
        WeightingMap map;
        map.width = lbd.width;
        map.height = lbd.height;
        map.channels = 3;
        map.data.resize(static_cast<size_t>(lbd.width) * lbd.height * 3);
        const T* v = out.values().data();
        const size_t plane = static_cast<size_t>(padded.height) * padded.width;
        for (int y = 0; y < lbd.height; ++y)
            for (int x = 0; x < lbd.width; ++x)
                for (int c = 0; c < 3; ++c) {
                    const T w = v[c * plane +
                                  static_cast<size_t>(y) * padded.width + x];
                    map.data[(static_cast<size_t>(y) * lbd.width + x) * 3 + c] =
                        static_cast<float>(std::clamp(w, T(0), T(1)));
                }
        return map;
    }

    /// End-to-end restoration; bit preservation is inherited from
    /// apply_weighting.
    ImageBuffer restore(const ImageBuffer& lbd, const BitSpec& spec) const {
        return apply_weighting(lbd, spec, weighting_map(lbd, spec));
    }

private:
    nn::Tensor4<T> conv3(const std::string& name,
                         const nn::Tensor4<T>& x) const {
        return nn::conv2d(x, params_.at(name + ".weight"),
                          params_.at(name + ".bias"), 1);
    }
    nn::Tensor4<T> conv1(const std::string& name,
                         const nn::Tensor4<T>& x) const {
        return nn::conv2d(x, params_.at(name + ".weight"),
                          params_.at(name + ".bias"), 0);
    }

    /// Stage function for RK-4: two 3x3 convolutions with an interior ReLU.
    nn::Tensor4<T> g_forward(const std::string& prefix,
                             const nn::Tensor4<T>& f) const {
        return conv3(prefix + ".conv2", nn::relu(conv3(prefix + ".conv1", f)));
    }

    /// Decoder fusion: expand the deeper feature 4x with a 1x1 convolution,
    /// pixel-shuffle up to the skip's scale, concatenate, fuse with a 1x1
    /// convolution, then one residual block.
    nn::Tensor4<T> fuse_forward(const std::string& prefix,
                                const nn::Tensor4<T>& deep,
                                const nn::Tensor4<T>& skip) const {
        auto up = nn::pixel_shuffle(conv1(prefix + ".expand", deep), 2);
        auto fused = conv1(prefix + ".fuse", nn::concat_channels(up, skip));
        return resblock_forward(prefix + ".res", fused);
    }

    /// Output head: Conv3x3 -> ReLU -> Conv3x3 -> Sigmoid, features to a
    /// 3-channel map in (0,1).
    nn::Tensor4<T> output_group(const std::string& prefix,
                                const nn::Tensor4<T>& f) const {
        auto y = conv3(prefix + ".conv2", nn::relu(conv3(prefix + ".conv1", f)));
        return nn::sigmoid(y);
    }

    void add_conv(const std::string& name, int cout, int cin, int k,
                  Rng& rng) {
        const T bound = T(1) / std::sqrt(static_cast<T>(cin * k * k));
        auto weight = nn::Tensor4<T>::zeros({cout, cin, k, k});
        for (auto& v : weight.values())
            v = static_cast<T>(rng.uniform_real(-bound, bound));
        params_.add(name + ".weight", std::move(weight));
        params_.add(name + ".bias", nn::Tensor4<T>::zeros({cout, 1, 1, 1}));
    }

    void add_g(const std::string& prefix, int f, Rng& rng) {
        add_conv(prefix + ".conv1", f, f, 3, rng);
        add_conv(prefix + ".conv2", f, f, 3, rng);
    }

    void build(Rng& rng) {
        const int f = config_.base_filters;
        add_conv("input_conv", f, 6, 3, rng);
        for (int stage = 1; stage <= 3; ++stage) {
            const std::string prefix = "enc" + std::to_string(stage);
            for (int step = 0; step < config_.opt_steps[stage - 1]; ++step) {
                const std::string sp = prefix + ".step" + std::to_string(step);
                for (int g = 1; g <= 4; ++g)
                    add_g(sp + ".rk4.g" + std::to_string(g), f, rng);
                params_.add(sp + ".rk4.h", nn::Tensor4<T>::scalar(T(1)));
                add_conv(sp + ".prox.conv1", f, f, 3, rng);
                add_conv(sp + ".prox.conv2", f, f, 3, rng);
                add_conv(sp + ".prox.conv3", f, f, 3, rng);
            }
            add_conv(prefix + ".tail.conv1", f, f, 3, rng);
            add_conv(prefix + ".tail.conv2", f, f, 3, rng);
        }
        for (const std::string prefix : {"dec1", "dec2"}) {
            add_conv(prefix + ".expand", 4 * f, f, 1, rng);
            add_conv(prefix + ".fuse", f, 2 * f, 1, rng);
            add_conv(prefix + ".res.conv1", f, f, 3, rng);
            add_conv(prefix + ".res.conv2", f, f, 3, rng);
        }
        for (int g = 1; g <= config_.output_groups; ++g) {
            const std::string prefix = "out" + std::to_string(g);
            add_conv(prefix + ".conv1", f, f, 3, rng);
            add_conv(prefix + ".conv2", 3, f, 3, rng);
        }
    }

    ModelConfig config_;
    nn::ParamStore<T> params_;
};

} // namespace bdekit

#endif
