#ifndef BDEKIT_IMAGE_HPP
#define BDEKIT_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace bdekit {

/// Integer raster, 3 channels, RGB interleaved, row major.
/// Samples are kept in 32-bit integers so 16-bit arithmetic never overflows.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 3;
    int max_bits = 8; // 8 for SDR, 16 for HDR
    std::vector<int32_t> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int bits)
        : width(w), height(h), max_bits(bits),
          data(static_cast<size_t>(w) * h * 3, 0) {}

    size_t sample_count() const { return data.size(); }
    int32_t max_value() const { return (1 << max_bits) - 1; }

    int32_t at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    int32_t& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    /// Throws if a field or sample violates the type invariants.
    void validate() const;

    bool same_shape(const ImageBuffer& other) const {
        return width == other.width && height == other.height &&
               channels == other.channels && max_bits == other.max_bits;
    }
};

/// Bit-depth degradation spec: total depth and number of missing low bits.
struct BitSpec {
    int max_bits = 8;     // b^max
    int missing_bits = 4; // b, 1 <= b <= max_bits - 1

    void validate() const;
    int input_bits() const { return max_bits - missing_bits; }
};

/// Per-pixel, per-channel real weights scaling the residual bound.
struct WeightingMap {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<float> data;

    WeightingMap() = default;
    WeightingMap(int w, int h)
        : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0f) {}

    float at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

/// Theoretical upper bound of the missing-bits residual, 2^b.
struct ResidualBound {
    int32_t value = 0;
};

/// An image paired with the filename it was loaded from.
struct NamedImage {
    std::string name;
    ImageBuffer image;
};

} // namespace bdekit

#endif
