#ifndef BDEKIT_METRICS_HPP
#define BDEKIT_METRICS_HPP

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bdekit/errors.hpp"
#include "bdekit/image.hpp"

namespace bdekit {

/// Peak signal-to-noise ratio in dB over the joint MSE of all channels,
/// with peak 2^max_bits - 1. Capped at 100 dB; identical images hit the cap.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Structural similarity on the BT.601 luminance, 11x11 Gaussian window
/// with sigma 1.5, K1=0.01, K2=0.03, valid windows only.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// Per-channel intensity distribution with one bin per representable value.
struct Histogram {
    int max_bits = 8;
    std::vector<int64_t> counts; // 2^max_bits bins

    static Histogram from_channel(const ImageBuffer& img, int channel);
    int64_t total() const;
    /// Bin masses summing to 1.
    std::vector<double> normalized() const;
};

/// 1-D 1-Wasserstein distance between two intensity histograms, in
/// intensity units: the cumulative-difference sum, computed in integer
/// arithmetic with one final division so equal-total inputs are exact.
double wdis(const Histogram& a, const Histogram& b);

/// Image-level distance: per-channel wdis averaged over the 3 channels.
double wdis(const ImageBuffer& a, const ImageBuffer& b);

/// Greedy 1-D transport oracle for tests; rejects histograms over 64 bins.
double wdis_bruteforce(const Histogram& a, const Histogram& b);

/// Emits `channel,bin,count` CSV rows for external plotting.
void histogram_plot_data(const ImageBuffer& img, std::ostream& out);

struct MetricRecord {
    std::string image;
    int bits_in = 0;
    int bits_missing = 0;
    double psnr_db = 0.0;
    double ssim_value = 0.0;
    double wdis_value = 0.0;
    bool ok = true;
    std::string error;
};

/// Mean metrics over the successful records of one missing-bits row.
struct MetricAggregate {
    int bits_missing = 0;
    int successes = 0;
    int failures = 0;
    double psnr_db = 0.0;
    double ssim_value = 0.0;
    double wdis_value = 0.0;
};

struct MetricReport {
    std::vector<MetricRecord> records;

    std::vector<MetricAggregate> aggregates() const;
    /// `image,bits_in,bits_missing,psnr_db,ssim,wdis` rows for successes.
    void write_csv(std::ostream& out) const;
    /// key=value aggregate summary, one block per missing-bits row.
    std::string summary_text() const;
};

/// Maps a degraded image to its restored version.
using Restorer = std::function<ImageBuffer(const ImageBuffer&, const BitSpec&)>;

/// For every image and spec: degrade, restore, score against the original.
/// A restorer failure is recorded on its row and evaluation continues.
/// jobs > 1 parallelizes over images; record order is deterministic.
MetricReport evaluate_dataset(const Restorer& restorer,
                              std::span<const NamedImage> dataset,
                              std::span<const BitSpec> specs, int jobs = 1);

} // namespace bdekit

#endif
