#include "ridfr/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ridfr/rng.hpp"

namespace ridfr {

void DegradationParams::validate() const {
    if (sigma < 0.0) throw std::invalid_argument("DegradationParams: sigma must be >= 0");
    if (scale < 1) throw std::invalid_argument("DegradationParams: scale must be >= 1");
    if (noise_std < 0.0) throw std::invalid_argument("DegradationParams: noise_std must be >= 0");
    if (jpeg_q && (*jpeg_q < 1 || *jpeg_q > 100))
        throw std::invalid_argument("DegradationParams: jpeg_q must be in [1,100]");
}

void DegradationRanges::validate() const {
    if (sigma_lo < 0.0 || sigma_hi < sigma_lo)
        throw std::invalid_argument("DegradationRanges: bad sigma range");
    if (noise_lo < 0.0 || noise_hi < noise_lo)
        throw std::invalid_argument("DegradationRanges: bad noise range");
    if (scales.empty()) throw std::invalid_argument("DegradationRanges: empty scale set");
    for (int s : scales)
        if (s < 1) throw std::invalid_argument("DegradationRanges: scale must be >= 1");
    if (jpeg_lo < 1 || jpeg_hi > 100 || jpeg_hi < jpeg_lo)
        throw std::invalid_argument("DegradationRanges: bad jpeg range");
}

Kernel gaussian_kernel(double sigma, int radius) {
    if (sigma < 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be >= 0");
    if (radius < 1) throw std::invalid_argument("gaussian_kernel: radius must be >= 1");
    Kernel k;
    k.radius = radius;
    int side = k.side();
    k.taps.assign(static_cast<size_t>(side) * side, 0.0);
    if (sigma == 0.0) {
        k.taps[static_cast<size_t>(radius) * side + radius] = 1.0;
        return k;
    }
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double w = std::exp(-(dx * dx + dy * dy) * inv2s2);
            k.taps[(dy + radius) * side + (dx + radius)] = w;
            sum += w;
        }
    for (double& w : k.taps) w /= sum;
    return k;
}

Image convolve_reflect(const Image& img, const Kernel& k) {
    check_image(img, "convolve_reflect");
    Image out(img.h, img.w);
    int r = k.radius;
    // reflect padding: index -1 -> 0, h -> h-1 (mirror without repeating edge twice
    // would be reflect-101; plain reflect is the degradation-literature default)
    auto reflect = [](int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    };
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    int sy = reflect(y + dy, img.h);
                    for (int dx = -r; dx <= r; ++dx) {
                        int sx = reflect(x + dx, img.w);
                        acc += k.at(dy, dx) * img.at(sy, sx, c);
                    }
                }
                out.at(y, x, c) = static_cast<float>(acc);
            }
    return out;
}

Image degrade(const Image& hq, const DegradationParams& params, uint64_t seed) {
    check_image(hq, "degrade");
    params.validate();
    if (hq.h % params.scale != 0 || hq.w % params.scale != 0)
        throw std::invalid_argument("degrade: image sides not divisible by scale");

    Image x = hq;
    if (params.sigma > 0.0) {
        int radius = std::max(1, static_cast<int>(std::ceil(3.0 * params.sigma)));
        x = convolve_reflect(x, gaussian_kernel(params.sigma, radius));
    }
    x = downsample_area(x, params.scale);
    if (params.noise_std > 0.0) {
        Pcg32 rng(seed, 0x6e6f697365ULL);
        for (float& v : x.v) v += static_cast<float>(rng.gaussian() * params.noise_std);
    }
    x = clip01(std::move(x));
    if (params.jpeg_q) x = jpeg_roundtrip(x, *params.jpeg_q);
    return x;
}

DegradationParams sample_degradation_params(uint64_t rng_seed, const DegradationRanges& ranges) {
    ranges.validate();
    Pcg32 rng(rng_seed, 0x646567ULL);
    DegradationParams p;
    p.sigma = rng.uniform(ranges.sigma_lo, ranges.sigma_hi);
    p.scale = ranges.scales[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(ranges.scales.size()) - 1))];
    p.noise_std = rng.uniform(ranges.noise_lo, ranges.noise_hi);
    p.jpeg_q = rng.uniform_int(ranges.jpeg_lo, ranges.jpeg_hi);
    return p;
}

Image downsample_reference(const Image& ref, uint64_t rng_seed, int min_side, int max_side) {
    check_image(ref, "downsample_reference");
    if (ref.h != ref.w)
        throw std::invalid_argument("downsample_reference: reference must be square");
    if (min_side > max_side || max_side > ref.h || min_side < 1)
        throw std::invalid_argument("downsample_reference: bounds out of order");
    Pcg32 rng(rng_seed, 0x726566ULL);
    int side = rng.uniform_int(min_side, max_side);
    if (side == ref.h) return ref;
    Image small = resize_bicubic(ref, side, side);
    return clip01(resize_bicubic(small, ref.h, ref.w));
}

}  // namespace ridfr
