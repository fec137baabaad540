#include "dran/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dran/error.hpp"

namespace dran {
namespace {

constexpr int kMatchBins = 256;
constexpr double kProbFloor = 1e-7;

std::vector<std::uint8_t> region_bits(const SegMask& mask, int region_id) {
    std::vector<std::uint8_t> bits(mask.size());
    const auto labels = mask.labels();
    bool any = false;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        bits[i] = labels[i] == region_id ? 1 : 0;
        any = any || bits[i] != 0;
    }
    if (!any) throw RegionNotFound(region_id);
    return bits;
}

double mean_abs_diff(const FeatureMap& a, const FeatureMap& b) {
    const auto x = a.data();
    const auto y = b.data();
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) total += std::abs(x[i] - y[i]);
    return total / static_cast<double>(x.size());
}

void require_same_shape(const FeatureMap& a, const FeatureMap& b, const char* what) {
    if (!a.same_shape(b)) throw InvalidArgument(std::string(what) + ": shape mismatch");
}

double mean_of(const FeatureMap& map, double (*fn)(double)) {
    double total = 0.0;
    for (double v : map.data()) total += fn(v);
    return total / static_cast<double>(map.size());
}

double clamped_log(double p) { return std::log(std::clamp(p, kProbFloor, 1.0 - kProbFloor)); }
double clamped_log_complement(double p) {
    return std::log(1.0 - std::clamp(p, kProbFloor, 1.0 - kProbFloor));
}

void require_probabilities(const FeatureMap& map, const char* what) {
    for (double p : map.data()) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw InvalidArgument(std::string(what) + ": probabilities must lie in [0, 1]");
        }
    }
}

// Samples of one channel grouped into histogram bins, each bin sorted by
// (value, pixel index).
struct BinnedSamples {
    std::vector<std::size_t> offsets;  // bins + 1 cumulative counts
    std::vector<std::size_t> pixels;   // grouped by bin
    std::vector<double> values;
};

BinnedSamples bin_samples(const FeatureMap& map, int channel, std::span<const std::uint8_t> mask) {
    Histogram hist;
    hist.counts.assign(kMatchBins, 0.0);
    const auto plane = map.plane(channel);
    BinnedSamples out;
    out.offsets.assign(kMatchBins + 1, 0);
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (mask[p] != 0) ++out.offsets[static_cast<std::size_t>(hist.bin_of(plane[p])) + 1];
    }
    std::partial_sum(out.offsets.begin(), out.offsets.end(), out.offsets.begin());
    out.pixels.resize(out.offsets.back());
    std::vector<std::size_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (mask[p] != 0) out.pixels[cursor[static_cast<std::size_t>(hist.bin_of(plane[p]))]++] = p;
    }
    for (int b = 0; b < kMatchBins; ++b) {
        const auto first = out.pixels.begin() + static_cast<std::ptrdiff_t>(out.offsets[static_cast<std::size_t>(b)]);
        const auto last = out.pixels.begin() + static_cast<std::ptrdiff_t>(out.offsets[static_cast<std::size_t>(b) + 1]);
        std::sort(first, last, [&](std::size_t l, std::size_t r) {
            return plane[l] != plane[r] ? plane[l] < plane[r] : l < r;
        });
    }
    out.values.resize(out.pixels.size());
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.values[i] = plane[out.pixels[i]];
    return out;
}

}  // namespace

int Histogram::bin_of(double value) const noexcept {
    const int n = bins();
    if (!(value > lo)) return 0;
    if (value >= hi) return n - 1;
    return std::min(n - 1, static_cast<int>((value - lo) / bin_width()));
}

double Histogram::total() const noexcept { return std::accumulate(counts.begin(), counts.end(), 0.0); }

void Histogram::normalize() {
    const double sum = total();
    if (sum > 0.0) {
        for (double& c : counts) c /= sum;
    }
}

Histogram masked_histogram(const FeatureMap& map, int channel, std::span<const std::uint8_t> mask,
                           int bins, double lo, double hi) {
    if (bins < 1 || !(hi > lo)) throw InvalidArgument("histogram needs bins >= 1 and hi > lo");
    if (mask.size() != map.plane_size()) throw InvalidArgument("histogram mask size mismatch");
    Histogram hist;
    hist.lo = lo;
    hist.hi = hi;
    hist.counts.assign(static_cast<std::size_t>(bins), 0.0);
    const auto plane = map.plane(channel);
    for (std::size_t p = 0; p < mask.size(); ++p) {
        if (mask[p] != 0) hist.counts[static_cast<std::size_t>(hist.bin_of(plane[p]))] += 1.0;
    }
    return hist;
}

FeatureMap histogram_match(const FeatureMap& src, const FeatureMap& ref,
                           std::span<const std::uint8_t> src_mask,
                           std::span<const std::uint8_t> ref_mask) {
    if (src.channels() != ref.channels()) throw InvalidArgument("histogram_match: channel mismatch");
    if (src_mask.size() != src.plane_size() || ref_mask.size() != ref.plane_size()) {
        throw InvalidArgument("histogram_match: mask does not match its image");
    }
    const auto set = [](std::uint8_t b) { return b != 0; };
    if (std::none_of(src_mask.begin(), src_mask.end(), set) ||
        std::none_of(ref_mask.begin(), ref_mask.end(), set)) {
        throw InvalidArgument("histogram_match: empty mask");
    }

    FeatureMap out = src;
    for (int c = 0; c < src.channels(); ++c) {
        const BinnedSamples s = bin_samples(src, c, src_mask);
        const BinnedSamples r = bin_samples(ref, c, ref_mask);
        const double n_src = static_cast<double>(s.pixels.size());
        const std::size_t n_ref = r.pixels.size();
        auto dst = out.plane(c);
        for (std::size_t rank = 0; rank < s.pixels.size(); ++rank) {
            // Source CDF at this sample, inverted through the reference CDF.
            const double q = (static_cast<double>(rank) + 0.5) / n_src;
            const auto target = std::min(n_ref - 1, static_cast<std::size_t>(q * static_cast<double>(n_ref)));
            const auto bin = std::upper_bound(r.offsets.begin(), r.offsets.end(), target) - r.offsets.begin() - 1;
            const std::size_t offset = target - r.offsets[static_cast<std::size_t>(bin)];
            dst[s.pixels[rank]] = r.values[r.offsets[static_cast<std::size_t>(bin)] + offset];
        }
    }
    return out;
}

double makeup_loss(const MakeupPair& pair, std::span<const int> regions) {
    if (regions.empty()) throw InvalidArgument("makeup_loss: region list is empty");
    require_same_shape(pair.gen_s2r, pair.x_s, "makeup_loss");
    require_same_shape(pair.gen_r2s, pair.x_r, "makeup_loss");
    if (!pair.mask_s.matches(pair.x_s) || !pair.mask_r.matches(pair.x_r)) {
        throw InvalidArgument("makeup_loss: mask does not match its image");
    }
    const auto region_l2 = [](const FeatureMap& gen, const FeatureMap& target,
                              const std::vector<std::uint8_t>& bits) {
        double squares = 0.0;
        for (int c = 0; c < gen.channels(); ++c) {
            const auto g = gen.plane(c);
            const auto t = target.plane(c);
            for (std::size_t p = 0; p < bits.size(); ++p) {
                if (bits[p] == 0) continue;
                const double d = g[p] - t[p];
                squares += d * d;
            }
        }
        return std::sqrt(squares);
    };

    double loss = 0.0;
    for (int id : regions) {
        const auto bits_s = region_bits(pair.mask_s, id);
        const auto bits_r = region_bits(pair.mask_r, id);
        loss += region_l2(pair.gen_s2r, histogram_match(pair.x_s, pair.x_r, bits_s, bits_r), bits_s);
        loss += region_l2(pair.gen_r2s, histogram_match(pair.x_r, pair.x_s, bits_r, bits_s), bits_r);
    }
    return loss;
}

double cycle_l1(const FeatureMap& a, const FeatureMap& b) {
    require_same_shape(a, b, "cycle_l1");
    return mean_abs_diff(a, b);
}

double perceptual_l2(std::span<const FeatureMap> feats_a, std::span<const FeatureMap> feats_b) {
    if (feats_a.size() != feats_b.size()) throw InvalidArgument("perceptual_l2: layer count mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < feats_a.size(); ++i) {
        require_same_shape(feats_a[i], feats_b[i], "perceptual_l2");
        const auto x = feats_a[i].data();
        const auto y = feats_b[i].data();
        double squares = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) squares += (x[j] - y[j]) * (x[j] - y[j]);
        loss += std::sqrt(squares / static_cast<double>(x.size()));
    }
    return loss;
}

double perceptual_l1(std::span<const FeatureMap> feats_a, std::span<const FeatureMap> feats_b) {
    if (feats_a.size() != feats_b.size()) throw InvalidArgument("perceptual_l1: layer count mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < feats_a.size(); ++i) {
        require_same_shape(feats_a[i], feats_b[i], "perceptual_l1");
        loss += mean_abs_diff(feats_a[i], feats_b[i]);
    }
    return loss;
}

double feature_matching(const std::vector<std::vector<FeatureMap>>& real,
                        const std::vector<std::vector<FeatureMap>>& fake) {
    if (real.size() != fake.size()) throw InvalidArgument("feature_matching: discriminator count mismatch");
    double loss = 0.0;
    for (std::size_t k = 0; k < real.size(); ++k) {
        if (real[k].size() != fake[k].size()) throw InvalidArgument("feature_matching: layer count mismatch");
        for (std::size_t i = 0; i < real[k].size(); ++i) {
            require_same_shape(real[k][i], fake[k][i], "feature_matching");
            loss += mean_abs_diff(real[k][i], fake[k][i]);
        }
    }
    return loss;
}

AdversarialLoss hinge_adv(const FeatureMap& scores_real, const FeatureMap& scores_fake) {
    AdversarialLoss loss;
    loss.discriminator = mean_of(scores_real, [](double s) { return std::max(0.0, 1.0 - s); }) +
                         mean_of(scores_fake, [](double s) { return std::max(0.0, 1.0 + s); });
    loss.generator = -mean_of(scores_fake, [](double s) { return s; });
    return loss;
}

AdversarialLoss log_adv(const DomainProbabilities& probs) {
    require_probabilities(probs.d_f_real, "log_adv");
    require_probabilities(probs.d_v_real, "log_adv");
    require_probabilities(probs.d_f_fake, "log_adv");
    require_probabilities(probs.d_v_fake, "log_adv");
    AdversarialLoss loss;
    loss.generator = -mean_of(probs.d_f_fake, clamped_log) - mean_of(probs.d_v_fake, clamped_log);
    loss.discriminator = -mean_of(probs.d_f_real, clamped_log) - mean_of(probs.d_v_real, clamped_log) -
                         mean_of(probs.d_f_fake, clamped_log_complement) -
                         mean_of(probs.d_v_fake, clamped_log_complement);
    return loss;
}

double pfdm(const FeatureMap& img_a, const FeatureMap& img_b, const SegMask& mask_a,
            const SegMask& mask_b, std::span<const int> regions) {
    if (regions.empty()) throw InvalidArgument("pfdm: region list is empty");
    if (img_a.channels() != img_b.channels()) throw InvalidArgument("pfdm: channel mismatch");
    if (!mask_a.matches(img_a) || !mask_b.matches(img_b)) {
        throw InvalidArgument("pfdm: mask does not match its image");
    }
    double weighted = 0.0;
    double weights = 0.0;
    for (int id : regions) {
        const auto bits_a = region_bits(mask_a, id);
        const auto bits_b = region_bits(mask_b, id);
        const double frac_a = static_cast<double>(std::count(bits_a.begin(), bits_a.end(), 1)) /
                              static_cast<double>(bits_a.size());
        const double frac_b = static_cast<double>(std::count(bits_b.begin(), bits_b.end(), 1)) /
                              static_cast<double>(bits_b.size());
        double distance = 0.0;
        for (int c = 0; c < img_a.channels(); ++c) {
            Histogram ha = masked_histogram(img_a, c, bits_a, kPfdmBins);
            Histogram hb = masked_histogram(img_b, c, bits_b, kPfdmBins);
            ha.normalize();
            hb.normalize();
            for (int b = 0; b < kPfdmBins; ++b) {
                distance += std::abs(ha.counts[static_cast<std::size_t>(b)] - hb.counts[static_cast<std::size_t>(b)]);
            }
        }
        distance /= static_cast<double>(img_a.channels());
        const double weight = 0.5 * (frac_a + frac_b);
        weighted += weight * distance;
        weights += weight;
    }
    return weighted / weights;
}

}  // namespace dran
