#ifndef BDEKIT_BITDEPTH_HPP
#define BDEKIT_BITDEPTH_HPP

#include "bdekit/errors.hpp"
#include "bdekit/image.hpp"

namespace bdekit {

/// Zeroes the lowest `spec.missing_bits` bits of every sample, keeping the
/// value at full scale. This is also the "zero padding" baseline.
ImageBuffer degrade(const ImageBuffer& img, const BitSpec& spec);

/// Returns 2^missing_bits.
ResidualBound residual_bound(const BitSpec& spec);

/// Replenishes a degraded image: per sample, adds
/// clamp(round(2^b * w), 0, 2^b - 1). The clamp guarantees the given
/// high-order bits are never modified.
ImageBuffer apply_weighting(const ImageBuffer& lbd, const BitSpec& spec,
                            const WeightingMap& w);

/// True iff floor(a / 2^b) == floor(b_img / 2^b) for every sample.
bool high_bits_equal(const ImageBuffer& a, const ImageBuffer& b_img,
                     const BitSpec& spec);

/// True iff every sample has its lowest `missing_bits` bits zero.
bool is_degraded(const ImageBuffer& img, const BitSpec& spec);

/// Ground-truth weighting map w* = (original - lbd) / 2^b. Applying it to
/// the degraded image reproduces the original exactly.
WeightingMap exact_weighting(const ImageBuffer& original,
                             const ImageBuffer& lbd, const BitSpec& spec);

/// Reflect-pads an image on the right/bottom so both dims are multiples of
/// `multiple`; crop_to undoes it after restoration.
ImageBuffer pad_to_multiple(const ImageBuffer& img, int multiple);
ImageBuffer crop_to(const ImageBuffer& img, int width, int height);

/// Copies the width x height region whose top-left corner is (x0, y0).
ImageBuffer crop_region(const ImageBuffer& img, int x0, int y0, int width,
                        int height);

} // namespace bdekit

#endif
