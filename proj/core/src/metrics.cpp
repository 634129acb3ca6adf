#include "bdekit/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "bdekit/bitdepth.hpp"
#include "bdekit/errors.hpp"

namespace bdekit {

namespace {

void require_comparable(const ImageBuffer& a, const ImageBuffer& b) {
    a.validate();
    b.validate();
    if (!a.same_shape(b))
        throw ShapeError("metric inputs differ in shape or depth");
}

long double to_long_double(__int128 v) {
    // split so integer magnitudes below 2^64 convert exactly
    const auto hi = static_cast<uint64_t>(v >> 64);
    const auto lo = static_cast<uint64_t>(v);
    return static_cast<long double>(hi) * 18446744073709551616.0L +
           static_cast<long double>(lo);
}

/// Shared final division so the closed-form path and the transport oracle
/// round identically.
double mass_to_distance(__int128 scaled_sum, int64_t total_a, int64_t total_b) {
    return static_cast<double>(
        to_long_double(scaled_sum) /
        (static_cast<long double>(total_a) * static_cast<long double>(total_b)));
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> g{};
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += g[i];
    }
    for (auto& v : g) v /= sum;
    return g;
}

/// Valid-region separable filtering: rows first, then columns.
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h,
                                 const std::array<double, kSsimWindow>& g) {
    const int wv = w - kSsimWindow + 1;
    const int hv = h - kSsimWindow + 1;
    std::vector<double> rows(static_cast<size_t>(wv) * h);
    for (int y = 0; y < h; ++y) {
        const double* src = img.data() + static_cast<size_t>(y) * w;
        double* dst = rows.data() + static_cast<size_t>(y) * wv;
        for (int x = 0; x < wv; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * src[x + k];
            dst[x] = acc;
        }
    }
    std::vector<double> out(static_cast<size_t>(wv) * hv);
    for (int y = 0; y < hv; ++y) {
        double* dst = out.data() + static_cast<size_t>(y) * wv;
        for (int x = 0; x < wv; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                acc += g[k] * rows[static_cast<size_t>(y + k) * wv + x];
            dst[x] = acc;
        }
    }
    return out;
}

std::vector<double> luma(const ImageBuffer& img) {
    std::vector<double> out(static_cast<size_t>(img.width) * img.height);
    for (size_t p = 0; p < out.size(); ++p)
        out[p] = 0.299 * img.data[p * 3] + 0.587 * img.data[p * 3 + 1] +
                 0.114 * img.data[p * 3 + 2];
    return out;
}

} // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    require_comparable(a, b);
    int64_t sq = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const int64_t d = a.data[i] - b.data[i];
        sq += d * d;
    }
    if (sq == 0) return 100.0;
    const double mse = static_cast<double>(sq) / a.data.size();
    const double peak = a.max_value();
    return std::min(100.0, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    require_comparable(a, b);
    if (a.width < kSsimWindow || a.height < kSsimWindow)
        throw ShapeError("ssim needs at least an 11x11 image");
    const double L = a.max_value();
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);

    const auto g = gaussian_window();
    const auto ya = luma(a);
    const auto yb = luma(b);
    const size_t n = ya.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
        aa[i] = ya[i] * ya[i];
        bb[i] = yb[i] * yb[i];
        ab[i] = ya[i] * yb[i];
    }
    const auto mu_a = filter_valid(ya, a.width, a.height, g);
    const auto mu_b = filter_valid(yb, a.width, a.height, g);
    const auto m_aa = filter_valid(aa, a.width, a.height, g);
    const auto m_bb = filter_valid(bb, a.width, a.height, g);
    const auto m_ab = filter_valid(ab, a.width, a.height, g);

    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        const double va = m_aa[i] - mu_a[i] * mu_a[i];
        const double vb = m_bb[i] - mu_b[i] * mu_b[i];
        const double cov = m_ab[i] - mu_a[i] * mu_b[i];
        acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
               ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(mu_a.size());
}

Histogram Histogram::from_channel(const ImageBuffer& img, int channel) {
    img.validate();
    if (channel < 0 || channel >= img.channels)
        throw ShapeError("histogram channel out of range");
    Histogram h;
    h.max_bits = img.max_bits;
    h.counts.assign(size_t{1} << img.max_bits, 0);
    const size_t pixels = static_cast<size_t>(img.width) * img.height;
    for (size_t p = 0; p < pixels; ++p)
        ++h.counts[static_cast<size_t>(img.data[p * img.channels + channel])];
    return h;
}

int64_t Histogram::total() const {
    int64_t t = 0;
    for (int64_t c : counts) t += c;
    return t;
}

std::vector<double> Histogram::normalized() const {
    const int64_t t = total();
    if (t == 0) throw InternalError("cannot normalize an empty histogram");
    std::vector<double> out(counts.size());
    for (size_t i = 0; i < counts.size(); ++i)
        out[i] = static_cast<double>(counts[i]) / static_cast<double>(t);
    return out;
}

double wdis(const Histogram& a, const Histogram& b) {
    if (a.counts.size() != b.counts.size())
        throw BitSpecError("wdis: histograms differ in bin count");
    const int64_t ta = a.total(), tb = b.total();
    if (ta == 0 || tb == 0)
        throw InternalError("wdis on an empty histogram");
    // cross-scale the cumulative counts so unequal totals stay in integers
    __int128 sum = 0;
    int64_t ca = 0, cb = 0;
    for (size_t v = 0; v < a.counts.size(); ++v) {
        ca += a.counts[v];
        cb += b.counts[v];
        const __int128 d =
            static_cast<__int128>(ca) * tb - static_cast<__int128>(cb) * ta;
        sum += d < 0 ? -d : d;
    }
    return mass_to_distance(sum, ta, tb);
}

double wdis(const ImageBuffer& a, const ImageBuffer& b) {
    a.validate();
    b.validate();
    if (a.max_bits != b.max_bits)
        throw BitSpecError("wdis: images differ in bit depth");
    double acc = 0.0;
    for (int c = 0; c < 3; ++c)
        acc += wdis(Histogram::from_channel(a, c),
                    Histogram::from_channel(b, c));
    return acc / 3.0;
}

double wdis_bruteforce(const Histogram& a, const Histogram& b) {
    if (a.counts.size() != b.counts.size())
        throw BitSpecError("wdis_bruteforce: histograms differ in bin count");
    if (a.counts.size() > 64)
        throw ShapeError("wdis_bruteforce is limited to 64 bins");
    const int64_t ta = a.total(), tb = b.total();
    if (ta == 0 || tb == 0)
        throw InternalError("wdis_bruteforce on an empty histogram");
    // greedy matching of the leftmost remaining supply to the leftmost
    // remaining demand, which is optimal in one dimension
    std::vector<__int128> supply(a.counts.size()), demand(b.counts.size());
    for (size_t i = 0; i < a.counts.size(); ++i) {
        supply[i] = static_cast<__int128>(a.counts[i]) * tb;
        demand[i] = static_cast<__int128>(b.counts[i]) * ta;
    }
    __int128 cost = 0;
    size_t i = 0, j = 0;
    while (i < supply.size() && j < demand.size()) {
        if (supply[i] == 0) {
            ++i;
            continue;
        }
        if (demand[j] == 0) {
            ++j;
            continue;
        }
        const __int128 move = supply[i] < demand[j] ? supply[i] : demand[j];
        const auto dist =
            static_cast<int64_t>(i > j ? i - j : j - i);
        cost += move * dist;
        supply[i] -= move;
        demand[j] -= move;
    }
    return mass_to_distance(cost, ta, tb);
}

void histogram_plot_data(const ImageBuffer& img, std::ostream& out) {
    out << "channel,bin,count\n";
    for (int c = 0; c < 3; ++c) {
        const Histogram h = Histogram::from_channel(img, c);
        for (size_t bin = 0; bin < h.counts.size(); ++bin)
            out << c << ',' << bin << ',' << h.counts[bin] << '\n';
    }
}

std::vector<MetricAggregate> MetricReport::aggregates() const {
    std::map<int, MetricAggregate> rows;
    for (const auto& r : records) {
        auto& agg = rows[r.bits_missing];
        agg.bits_missing = r.bits_missing;
        if (!r.ok) {
            ++agg.failures;
            continue;
        }
        ++agg.successes;
        agg.psnr_db += r.psnr_db;
        agg.ssim_value += r.ssim_value;
        agg.wdis_value += r.wdis_value;
    }
    std::vector<MetricAggregate> out;
    for (auto& [bits, agg] : rows) {
        if (agg.successes > 0) {
            agg.psnr_db /= agg.successes;
            agg.ssim_value /= agg.successes;
            agg.wdis_value /= agg.successes;
        }
        out.push_back(agg);
    }
    return out;
}

void MetricReport::write_csv(std::ostream& out) const {
    out << "image,bits_in,bits_missing,psnr_db,ssim,wdis\n";
    out << std::fixed;
    for (const auto& r : records) {
        if (!r.ok) continue;
        out << r.image << ',' << r.bits_in << ',' << r.bits_missing << ','
            << std::setprecision(4) << r.psnr_db << ','
            << std::setprecision(6) << r.ssim_value << ','
            << std::setprecision(6) << r.wdis_value << '\n';
    }
}

std::string MetricReport::summary_text() const {
    std::ostringstream out;
    out << std::fixed;
    for (const auto& agg : aggregates()) {
        out << "bits_missing=" << agg.bits_missing
            << " count=" << agg.successes
            << " psnr_db=" << std::setprecision(4) << agg.psnr_db
            << " ssim=" << std::setprecision(6) << agg.ssim_value
            << " wdis=" << std::setprecision(6) << agg.wdis_value;
        if (agg.failures > 0) out << " failures=" << agg.failures;
        out << "\n";
    }
    for (const auto& r : records)
        if (!r.ok)
            out << "failed image=" << r.image
                << " bits_missing=" << r.bits_missing << " error=" << r.error
                << "\n";
    return out.str();
}

MetricReport evaluate_dataset(const Restorer& restorer,
                              std::span<const NamedImage> dataset,
                              std::span<const BitSpec> specs, int jobs) {
    if (dataset.empty()) throw Error("evaluate_dataset: empty dataset");
    if (specs.empty()) throw Error("evaluate_dataset: no bit specs given");
    if (jobs < 1) jobs = 1;
    MetricReport report;
    report.records.resize(dataset.size() * specs.size());

    const int ni = static_cast<int>(dataset.size());
    const int ns = static_cast<int>(specs.size());
#pragma omp parallel for collapse(2) schedule(dynamic) num_threads(jobs)
    for (int i = 0; i < ni; ++i) {
        for (int s = 0; s < ns; ++s) {
            MetricRecord& rec = report.records[static_cast<size_t>(i) * ns + s];
            const NamedImage& named = dataset[i];
            const BitSpec& spec = specs[s];
            rec.image = named.name;
            rec.bits_in = spec.input_bits();
            rec.bits_missing = spec.missing_bits;
            try {
                const ImageBuffer lbd = degrade(named.image, spec);
                const ImageBuffer restored = restorer(lbd, spec);
                if (!restored.same_shape(named.image))
                    throw ShapeError("restorer changed the image shape");
                rec.psnr_db = psnr(restored, named.image);
                rec.ssim_value = ssim(restored, named.image);
                rec.wdis_value = wdis(restored, named.image);
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.error = e.what();
            }
        }
    }
    return report;
}

} // namespace bdekit
