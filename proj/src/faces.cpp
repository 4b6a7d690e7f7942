#include "ridfr/faces.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ridfr/rng.hpp"

namespace ridfr {

namespace {

void check_range(double x, double lo, double hi, const char* name) {
    if (!(x >= lo && x <= hi))
        throw std::invalid_argument(std::string(name) + " out of range [" +
                                    std::to_string(lo) + "," + std::to_string(hi) + "]");
}

struct Rgb {
    double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    double c = v * s;
    double hp = h * 6.0;
    double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1)      { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else             { r = c; b = x; }
    double m = v - c;
    return {r + m, g + m, b + m};
}

inline double smoothstep(double e0, double e1, double x) {
    double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// coverage of an ellipse given normalized implicit value e = (u/a)^2+(v/b)^2
inline double ellipse_alpha(double e, double edge) { return smoothstep(0.0, edge, 1.0 - e); }

}  // namespace

void IdentityParams::validate() const {
    check_range(face_aspect, 0.7, 1.3, "face_aspect");
    if (!(hue >= 0.0 && hue < 1.0)) throw std::invalid_argument("hue out of range [0,1)");
    check_range(eye_spacing, 0.2, 0.4, "eye_spacing");
    check_range(nose_scale, 0.5, 1.5, "nose_scale");
    check_range(jaw_curvature, -1.0, 1.0, "jaw_curvature");
}

std::array<double, 5> IdentityParams::oracle_vector() const {
    return {(face_aspect - 0.7) / 0.6, hue, (eye_spacing - 0.2) / 0.2,
            (nose_scale - 0.5) / 1.0, (jaw_curvature + 1.0) / 2.0};
}

double oracle_distance(const IdentityParams& a, const IdentityParams& b) {
    auto va = a.oracle_vector(), vb = b.oracle_vector();
    double acc = 0.0;
    for (size_t i = 0; i < va.size(); ++i) acc += (va[i] - vb[i]) * (va[i] - vb[i]);
    return std::sqrt(acc);
}

const char* hair_style_name(HairStyle h) {
    switch (h) {
        case HairStyle::none: return "none";
        case HairStyle::short_crop: return "short";
        case HairStyle::long_sides: return "long";
        case HairStyle::hat: return "hat";
    }
    return "none";
}

HairStyle hair_style_from_name(const std::string& name) {
    if (name == "none") return HairStyle::none;
    if (name == "short") return HairStyle::short_crop;
    if (name == "long") return HairStyle::long_sides;
    if (name == "hat") return HairStyle::hat;
    throw std::invalid_argument("unknown hair style: " + name);
}

void NuisanceParams::validate() const {
    check_range(rotation_deg, -25.0, 25.0, "rotation_deg");
    check_range(tx, -0.08, 0.08, "tx");
    check_range(ty, -0.08, 0.08, "ty");
    check_range(mouth_curve, -1.0, 1.0, "mouth_curve");
    check_range(brightness, 0.7, 1.3, "brightness");
}

IdentityParams sample_identity_params(uint64_t seed) {
    Pcg32 rng(seed, 0x6964ULL);
    IdentityParams p;
    p.face_aspect = rng.uniform(0.7, 1.3);
    p.hue = rng.uniform();
    p.eye_spacing = rng.uniform(0.2, 0.4);
    p.nose_scale = rng.uniform(0.5, 1.5);
    p.jaw_curvature = rng.uniform(-1.0, 1.0);
    return p;
}

NuisanceParams sample_nuisance_params(uint64_t seed) {
    Pcg32 rng(seed, 0x6e75ULL);
    NuisanceParams p;
    p.rotation_deg = rng.uniform(-25.0, 25.0);
    p.tx = rng.uniform(-0.08, 0.08);
    p.ty = rng.uniform(-0.08, 0.08);
    p.mouth_curve = rng.uniform(-1.0, 1.0);
    p.hair = static_cast<HairStyle>(rng.uniform_int(0, 3));
    p.brightness = rng.uniform(0.7, 1.3);
    return p;
}

Image render_toy_face(const IdentityParams& id, const NuisanceParams& nu, int side) {
    id.validate();
    nu.validate();
    if (side < 32) throw std::invalid_argument("render_toy_face: side must be >= 32");

    const double S = side;
    const double cx = 0.5 * S + nu.tx * S;
    const double cy = 0.5 * S + nu.ty * S;
    const double theta = nu.rotation_deg * (3.14159265358979323846 / 180.0);
    const double ct = std::cos(theta), st = std::sin(theta);

    const double ax = 0.40 * S * std::sqrt(id.face_aspect);
    const double ay = 0.40 * S / std::sqrt(id.face_aspect);

    const Rgb skin = hsv_to_rgb(id.hue, 0.45, 0.85);
    const Rgb nose_tone = {skin.r * 0.72, skin.g * 0.72, skin.b * 0.72};
    const Rgb iris = hsv_to_rgb(id.hue + 0.5, 0.55, 0.35);
    const Rgb hair_tone = {0.16, 0.12, 0.10};
    const Rgb hat_tone = {0.20, 0.26, 0.52};
    const Rgb mouth_tone = {0.48, 0.16, 0.18};

    const double edge = 6.0 / S;  // soft-edge width in implicit units

    const double eye_dx = id.eye_spacing * ax;  // offset from face center
    const double eye_y = -0.22 * ay;
    const double eye_rx = 0.11 * ax, eye_ry = 0.085 * ay;
    const double iris_r = 0.055 * ax;

    const double mouth_y = 0.48 * ay;
    const double mouth_hw = 0.30 * ax;
    const double mouth_th = 0.045 * ay;

    Image img(side, side);
    for (int py = 0; py < side; ++py) {
        for (int px = 0; px < side; ++px) {
            double dx = (px + 0.5) - cx;
            double dy = (py + 0.5) - cy;
            // inverse rotation into face coordinates
            double u = ct * dx + st * dy;
            double v = -st * dx + ct * dy;

            // background with a slight vertical ramp
            double bgl = 0.12 + 0.06 * (static_cast<double>(py) / S);
            double r = bgl, g = bgl, b = bgl;

            // face ellipse; jaw curvature stretches or shortens the chin
            double ay_eff = ay;
            if (v > 0.0) {
                double t = std::min(v / ay, 1.0);
                ay_eff = ay * (1.0 + 0.16 * id.jaw_curvature * t);
            }
            double e_face = (u * u) / (ax * ax) + (v * v) / (ay_eff * ay_eff);
            double a_face = ellipse_alpha(e_face, edge);
            r = r + a_face * (skin.r - r);
            g = g + a_face * (skin.g - g);
            b = b + a_face * (skin.b - b);

            if (a_face > 0.0) {
                // nose: tapered wedge scaled by nose_scale
                double ns = id.nose_scale;
                double nose_top = -0.05 * ay, nose_bot = 0.25 * ay * ns;
                if (v >= nose_top && v <= nose_bot) {
                    double t = (v - nose_top) / (nose_bot - nose_top);
                    double hw = (0.035 + 0.085 * t) * ax * ns;
                    double a_nose = smoothstep(0.0, 1.5, (hw - std::abs(u)));
                    r += a_nose * (nose_tone.r - r);
                    g += a_nose * (nose_tone.g - g);
                    b += a_nose * (nose_tone.b - b);
                }

                // eyes: sclera + iris
                for (int s = -1; s <= 1; s += 2) {
                    double eu = u - s * eye_dx;
                    double ev = v - eye_y;
                    double e_eye = (eu * eu) / (eye_rx * eye_rx) + (ev * ev) / (eye_ry * eye_ry);
                    double a_eye = ellipse_alpha(e_eye, 0.35);
                    if (a_eye > 0.0) {
                        r += a_eye * (0.93 - r);
                        g += a_eye * (0.93 - g);
                        b += a_eye * (0.93 - b);
                        double e_ir = (eu * eu + ev * ev) / (iris_r * iris_r);
                        double a_ir = ellipse_alpha(e_ir, 0.6);
                        r += a_ir * (iris.r - r);
                        g += a_ir * (iris.g - g);
                        b += a_ir * (iris.b - b);
                    }
                }

                // mouth: curved stroke, curvature is expression
                if (std::abs(u) <= mouth_hw * 1.2) {
                    double tt = u / mouth_hw;
                    double vc = mouth_y + 0.10 * ay * nu.mouth_curve * (tt * tt * 2.0 - 1.0);
                    double d = std::abs(v - vc);
                    double a_m = smoothstep(0.0, 1.2, (mouth_th - d)) * smoothstep(0.0, 0.2, 1.2 - std::abs(tt));
                    r += a_m * (mouth_tone.r - r);
                    g += a_m * (mouth_tone.g - g);
                    b += a_m * (mouth_tone.b - b);
                }
            }

            // hair overlay (drawn above the face)
            double a_hair = 0.0;
            const Rgb* hc = &hair_tone;
            switch (nu.hair) {
                case HairStyle::none:
                    break;
                case HairStyle::short_crop: {
                    double e_h = (u * u) / (ax * ax * 1.12) + (v * v) / (ay * ay * 1.12);
                    if (v < -0.42 * ay) a_hair = ellipse_alpha(e_h, edge);
                    break;
                }
                case HairStyle::long_sides: {
                    double e_h = (u * u) / (ax * ax * 1.12) + (v * v) / (ay * ay * 1.12);
                    if (v < -0.42 * ay) a_hair = ellipse_alpha(e_h, edge);
                    double au = std::abs(u);
                    if (v >= -0.6 * ay && v <= 0.75 * ay && au >= 0.82 * ax && au <= 1.18 * ax)
                        a_hair = std::max(a_hair, smoothstep(0.0, 1.5, (1.18 * ax - au)) *
                                                      smoothstep(0.0, 1.5, (au - 0.82 * ax)));
                    break;
                }
                case HairStyle::hat: {
                    hc = &hat_tone;
                    double e_h = (u * u) / (ax * ax * 1.2) + (v * v) / (ay * ay * 1.2);
                    if (v < -0.38 * ay) a_hair = ellipse_alpha(e_h, edge);
                    if (v >= -0.46 * ay && v <= -0.34 * ay && std::abs(u) <= 1.3 * ax)
                        a_hair = std::max(a_hair, 1.0);
                    break;
                }
            }
            if (a_hair > 0.0) {
                r += a_hair * (hc->r - r);
                g += a_hair * (hc->g - g);
                b += a_hair * (hc->b - b);
            }

            img.at(py, px, 0) = static_cast<float>(std::clamp(r * nu.brightness, 0.0, 1.0));
            img.at(py, px, 1) = static_cast<float>(std::clamp(g * nu.brightness, 0.0, 1.0));
            img.at(py, px, 2) = static_cast<float>(std::clamp(b * nu.brightness, 0.0, 1.0));
        }
    }
    return img;
}

}  // namespace ridfr
