#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ridfr/image.hpp"

namespace ridfr {

// Parameters of the blur -> downsample -> noise -> JPEG synthesis chain.
struct DegradationParams {
    double sigma = 0.0;       // blur std-dev in pixels
    int scale = 1;            // integer downsample factor, >= 1
    double noise_std = 0.0;   // additive Gaussian std-dev on [0,1] scale
    std::optional<int> jpeg_q;  // JPEG quality in [1,100]; absent = skip

    void validate() const;
};

// Sampling ranges for online degradation synthesis.
struct DegradationRanges {
    double sigma_lo = 0.4, sigma_hi = 3.0;
    std::vector<int> scales = {2, 4, 8};
    double noise_lo = 0.0, noise_hi = 0.08;
    int jpeg_lo = 30, jpeg_hi = 90;

    void validate() const;
};

// Square odd-sized blur kernel; taps sum to 1.
struct Kernel {
    int radius = 0;
    std::vector<double> taps;  // (2*radius+1)^2, row-major

    int side() const { return 2 * radius + 1; }
    double at(int dy, int dx) const { return taps[(dy + radius) * side() + (dx + radius)]; }
};

// Normalized isotropic Gaussian; sigma = 0 yields the delta kernel.
Kernel gaussian_kernel(double sigma, int radius);

// 2-D convolution with reflect padding.
Image convolve_reflect(const Image& img, const Kernel& k);

// blur -> area downsample -> seeded Gaussian noise -> clip -> optional JPEG.
// Pure function of (hq, params, seed).
Image degrade(const Image& hq, const DegradationParams& params, uint64_t seed);

// Uniform draw from the configured ranges; deterministic given seed.
DegradationParams sample_degradation_params(uint64_t rng_seed, const DegradationRanges& ranges);

// Bicubic down to a seeded square side in [min_side, max_side], then bicubic
// back up to the original size. The reference-quality augmentation.
Image downsample_reference(const Image& ref, uint64_t rng_seed, int min_side, int max_side);

}  // namespace ridfr
