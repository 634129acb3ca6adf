#include "bdekit/bitdepth.hpp"

#include <cmath>
#include <string>

#include "bdekit/errors.hpp"

namespace bdekit {

void ImageBuffer::validate() const {
    if (width <= 0 || height <= 0)
        throw ShapeError("image dims must be positive, got " +
                         std::to_string(width) + "x" + std::to_string(height));
    if (channels != 3)
        throw ShapeError("image must have 3 channels, got " +
                         std::to_string(channels));
    if (max_bits != 8 && max_bits != 16)
        throw BitSpecError("image max_bits must be 8 or 16, got " +
                           std::to_string(max_bits));
    if (data.size() != static_cast<size_t>(width) * height * channels)
        throw ShapeError("image data length does not match dims");
    const int32_t hi = max_value();
    for (int32_t v : data)
        if (v < 0 || v > hi)
            throw ShapeError("sample " + std::to_string(v) +
                             " outside [0, " + std::to_string(hi) + "]");
}

void BitSpec::validate() const {
    if (max_bits != 8 && max_bits != 16)
        throw BitSpecError("max_bits must be 8 or 16, got " +
                           std::to_string(max_bits));
    if (missing_bits < 1 || missing_bits > max_bits - 1)
        throw BitSpecError("missing_bits must be in [1, " +
                           std::to_string(max_bits - 1) + "], got " +
                           std::to_string(missing_bits));
}

namespace {

void check_depth(const ImageBuffer& img, const BitSpec& spec) {
    spec.validate();
    if (img.max_bits != spec.max_bits)
        throw BitSpecError("bit spec depth " + std::to_string(spec.max_bits) +
                           " does not match image depth " +
                           std::to_string(img.max_bits));
}

void check_map_shape(const ImageBuffer& img, const WeightingMap& w) {
    if (w.width != img.width || w.height != img.height ||
        w.channels != img.channels)
        throw ShapeError("weighting map shape does not match image");
}

} // namespace

ImageBuffer degrade(const ImageBuffer& img, const BitSpec& spec) {
    check_depth(img, spec);
    ImageBuffer out = img;
    const int b = spec.missing_bits;
    for (int32_t& v : out.data) v = (v >> b) << b;
    return out;
}

ResidualBound residual_bound(const BitSpec& spec) {
    spec.validate();
    return ResidualBound{int32_t{1} << spec.missing_bits};
}

bool is_degraded(const ImageBuffer& img, const BitSpec& spec) {
    check_depth(img, spec);
    const int32_t mask = (int32_t{1} << spec.missing_bits) - 1;
    for (int32_t v : img.data)
        if ((v & mask) != 0) return false;
    return true;
}

ImageBuffer apply_weighting(const ImageBuffer& lbd, const BitSpec& spec,
                            const WeightingMap& w) {
    check_depth(lbd, spec);
    check_map_shape(lbd, w);
    if (!is_degraded(lbd, spec))
        throw BitSpecError("apply_weighting input has nonzero low bits");
    for (float wv : w.data)
        if (!std::isfinite(wv))
            throw ShapeError("weighting map contains a non-finite value");

    const int32_t bound = int32_t{1} << spec.missing_bits;
    ImageBuffer out = lbd;
    for (size_t i = 0; i < out.data.size(); ++i) {
        // round half up, then clamp below the bound so no carry can reach
        // the preserved high-order bits
        int32_t r = static_cast<int32_t>(
            std::floor(static_cast<double>(bound) * w.data[i] + 0.5));
        if (r < 0) r = 0;
        if (r > bound - 1) r = bound - 1;
        out.data[i] = lbd.data[i] + r;
    }
    return out;
}

bool high_bits_equal(const ImageBuffer& a, const ImageBuffer& b_img,
                     const BitSpec& spec) {
    check_depth(a, spec);
    if (!a.same_shape(b_img))
        throw ShapeError("high_bits_equal: image shapes differ");
    const int b = spec.missing_bits;
    for (size_t i = 0; i < a.data.size(); ++i)
        if ((a.data[i] >> b) != (b_img.data[i] >> b)) return false;
    return true;
}

WeightingMap exact_weighting(const ImageBuffer& original,
                             const ImageBuffer& lbd, const BitSpec& spec) {
    check_depth(original, spec);
    if (!original.same_shape(lbd))
        throw ShapeError("exact_weighting: image shapes differ");
    const float bound = static_cast<float>(int32_t{1} << spec.missing_bits);
    WeightingMap w(original.width, original.height);
    for (size_t i = 0; i < w.data.size(); ++i)
        w.data[i] =
            static_cast<float>(original.data[i] - lbd.data[i]) / bound;
    return w;
}

ImageBuffer pad_to_multiple(const ImageBuffer& img, int multiple) {
    const int pw = (multiple - img.width % multiple) % multiple;
    const int ph = (multiple - img.height % multiple) % multiple;
    if (pw == 0 && ph == 0) return img;
    ImageBuffer out(img.width + pw, img.height + ph, img.max_bits);
    for (int y = 0; y < out.height; ++y) {
        // reflect without repeating the border sample
        int sy = y < img.height ? y : 2 * img.height - 2 - y;
        if (sy < 0) sy = 0;
        for (int x = 0; x < out.width; ++x) {
            int sx = x < img.width ? x : 2 * img.width - 2 - x;
            if (sx < 0) sx = 0;
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

ImageBuffer crop_to(const ImageBuffer& img, int width, int height) {
    if (width == img.width && height == img.height) return img;
    return crop_region(img, 0, 0, width, height);
}

ImageBuffer crop_region(const ImageBuffer& img, int x0, int y0, int width,
                        int height) {
    if (x0 < 0 || y0 < 0 || width <= 0 || height <= 0 ||
        x0 + width > img.width || y0 + height > img.height)
        throw ShapeError("crop_region: region outside the image");
    ImageBuffer out(width, height, img.max_bits);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
    return out;
}

} // namespace bdekit
