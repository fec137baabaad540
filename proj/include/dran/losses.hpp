#pragma once

// Loss and metric formulas evaluated on supplied tensors. Reductions:
//   cycle_l1          mean |a - b|
//   makeup_loss       sum over regions of plain L2 norms over region pixels
//   perceptual_l2     sum over layers of sqrt(mean(diff^2))
//   perceptual_l1     sum over layers of mean |diff|
//   feature_matching  sum over discriminators and layers of mean |diff|
//   hinge_adv / log_adv  means over all entries

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dran/feature_map.hpp"

namespace dran {

/// Loss weights used when these terms are combined for training.
struct LossWeights {
    static constexpr double adversarial = 1.0;
    static constexpr double makeup = 1.0;
    static constexpr double perceptual = 10.0;
    static constexpr double cycle = 10.0;
};

struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> counts;

    int bins() const noexcept { return static_cast<int>(counts.size()); }
    double bin_width() const noexcept { return (hi - lo) / static_cast<double>(counts.size()); }
    /// Bin of a value; values outside [lo, hi] land in the end bins.
    int bin_of(double value) const noexcept;
    double total() const noexcept;
    void normalize();
};

/// Histogram of one channel over pixels where mask != 0.
Histogram masked_histogram(const FeatureMap& map, int channel, std::span<const std::uint8_t> mask,
                           int bins, double lo = 0.0, double hi = 1.0);

/// Per-channel CDF matching of the masked source pixels onto the masked
/// reference pixels, using 256 bins over [0, 1] with ties inside a bin
/// ordered by value. Each source pixel takes the reference sample at the
/// same empirical quantile, so equal-count regions receive exactly the
/// reference's sorted values. Pixels outside src_mask are copied.
FeatureMap histogram_match(const FeatureMap& src, const FeatureMap& ref,
                           std::span<const std::uint8_t> src_mask,
                           std::span<const std::uint8_t> ref_mask);

struct MakeupPair {
    const FeatureMap& gen_s2r;  // G(x_s, x_r)
    const FeatureMap& gen_r2s;  // G(x_r, x_s)
    const FeatureMap& x_s;
    const FeatureMap& x_r;
    const SegMask& mask_s;
    const SegMask& mask_r;
};

double makeup_loss(const MakeupPair& pair, std::span<const int> regions);

double cycle_l1(const FeatureMap& a, const FeatureMap& b);

double perceptual_l2(std::span<const FeatureMap> feats_a, std::span<const FeatureMap> feats_b);
double perceptual_l1(std::span<const FeatureMap> feats_a, std::span<const FeatureMap> feats_b);

/// Outer index: discriminator, inner index: layer.
double feature_matching(const std::vector<std::vector<FeatureMap>>& real,
                        const std::vector<std::vector<FeatureMap>>& fake);

struct AdversarialLoss {
    double discriminator = 0.0;
    double generator = 0.0;
};

AdversarialLoss hinge_adv(const FeatureMap& scores_real, const FeatureMap& scores_fake);

/// Probabilities from the two domain discriminators. Inputs must lie in
/// [0, 1]; they are clamped to [1e-7, 1 - 1e-7] before taking logs.
struct DomainProbabilities {
    const FeatureMap& d_f_real;  // D_F(x_s)
    const FeatureMap& d_v_real;  // D_V(x_r)
    const FeatureMap& d_f_fake;  // D_F(G(x_r, x_s))
    const FeatureMap& d_v_fake;  // D_V(G(x_s, x_r))
};

AdversarialLoss log_adv(const DomainProbabilities& probs);

inline constexpr int kPfdmBins = 32;

/// Area-weighted L1 distance between per-region, per-channel 32-bin color
/// histograms. Region weight is the mean of its pixel fraction in the two
/// images. Result lies in [0, 2].
double pfdm(const FeatureMap& img_a, const FeatureMap& img_b, const SegMask& mask_a,
            const SegMask& mask_b, std::span<const int> regions);

}  // namespace dran
