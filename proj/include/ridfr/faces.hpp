#pragma once

#include <array>
#include <cstdint>

#include "ridfr/image.hpp"

namespace ridfr {

// Ground-truth identity factors of a rendered face. Two faces share an
// identity iff their IdentityParams are exactly equal.
struct IdentityParams {
    double face_aspect = 1.0;    // [0.7, 1.3]
    double hue = 0.0;            // [0, 1)
    double eye_spacing = 0.3;    // [0.2, 0.4] of face width
    double nose_scale = 1.0;     // [0.5, 1.5]
    double jaw_curvature = 0.0;  // [-1, 1]

    void validate() const;
    bool operator==(const IdentityParams&) const = default;

    // min-max normalized factor vector; the learned-encoder-independent
    // identity signal used by synthetic-data checks
    std::array<double, 5> oracle_vector() const;
};

double oracle_distance(const IdentityParams& a, const IdentityParams& b);

enum class HairStyle { none = 0, short_crop = 1, long_sides = 2, hat = 3 };

const char* hair_style_name(HairStyle h);
HairStyle hair_style_from_name(const std::string& name);

// Identity-irrelevant render factors: pose, expression, hair, lighting.
struct NuisanceParams {
    double rotation_deg = 0.0;  // [-25, 25]
    double tx = 0.0;            // [-0.08, 0.08] of side
    double ty = 0.0;            // [-0.08, 0.08] of side
    double mouth_curve = 0.0;   // [-1, 1]
    HairStyle hair = HairStyle::none;
    double brightness = 1.0;    // [0.7, 1.3]

    void validate() const;
};

IdentityParams sample_identity_params(uint64_t seed);
NuisanceParams sample_nuisance_params(uint64_t seed);

// Deterministic rasterization of a face-like image at side x side, values
// in [0,1]. Brightness is applied as a final pixel-wise multiply.
Image render_toy_face(const IdentityParams& id, const NuisanceParams& nuisance, int side);

}  // namespace ridfr
