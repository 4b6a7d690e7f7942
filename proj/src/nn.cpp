#include "ridfr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ridfr {

ParamPtr ParamSet::add(const std::string& name, std::vector<int> shape) {
    auto p = std::make_shared<Param>(name, std::move(shape));
    items.push_back(p);
    return p;
}

ParamPtr ParamSet::find(const std::string& name) const {
    for (const auto& p : items)
        if (p->name == name) return p;
    return nullptr;
}

void ParamSet::set_trainable_prefix(const std::string& prefix, bool t) {
    for (auto& p : items)
        if (p->name.rfind(prefix, 0) == 0) p->trainable = t;
}

size_t ParamSet::count() const {
    size_t n = 0;
    for (const auto& p : items) n += p->w.size();
    return n;
}

uint64_t ParamSet::weights_hash() const {
    uint64_t h = 14695981039346656037ULL;
    for (const auto& p : items) {
        h = fnv1a64(p->name.data(), p->name.size(), h);
        h = fnv1a64(p->w.data(), p->w.size() * sizeof(float), h);
    }
    return h;
}

uint64_t ParamSet::weights_hash_prefix(const std::string& prefix) const {
    uint64_t h = 14695981039346656037ULL;
    for (const auto& p : items) {
        if (p->name.rfind(prefix, 0) != 0) continue;
        h = fnv1a64(p->name.data(), p->name.size(), h);
        h = fnv1a64(p->w.data(), p->w.size() * sizeof(float), h);
    }
    return h;
}

void init_kaiming(Param& p, int fan_in, Pcg32& rng) {
    float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
    rng.fill_gaussian(p.w, stddev);
}

void init_normal(Param& p, float stddev, Pcg32& rng) { rng.fill_gaussian(p.w, stddev); }

// ------------------------------------------------------------------ Conv2d

Conv2d::Conv2d(ParamSet& reg, const std::string& name, int in_ch_, int out_ch_, int k_,
               int stride_, int pad_, Pcg32& rng, bool zero_init)
    : in_ch(in_ch_), out_ch(out_ch_), k(k_), stride(stride_), pad(pad_) {
    w = reg.add(name + ".w", {out_ch, in_ch, k, k});
    b = reg.add(name + ".b", {out_ch});
    if (!zero_init) init_kaiming(*w, in_ch * k * k, rng);
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.dim(0) != in_ch)
        throw std::invalid_argument("Conv2d " + w->name + ": bad input shape " + x.shape_str());
    ih = x.dim(1);
    iw = x.dim(2);
    oh = (ih + 2 * pad - k) / stride + 1;
    ow = (iw + 2 * pad - k) / stride + 1;
    const int cols = in_ch * k * k;
    const int pixels = oh * ow;

    col = Tensor({pixels, cols});
    float* cp = col.data();
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float* row = cp + (static_cast<size_t>(oy) * ow + ox) * cols;
            int idx = 0;
            for (int ic = 0; ic < in_ch; ++ic) {
                const float* xc = x.data() + static_cast<size_t>(ic) * ih * iw;
                for (int ky = 0; ky < k; ++ky) {
                    int sy = oy * stride + ky - pad;
                    if (sy < 0 || sy >= ih) {
                        for (int kx = 0; kx < k; ++kx) row[idx++] = 0.0f;
                        continue;
                    }
                    const float* xr = xc + static_cast<size_t>(sy) * iw;
                    for (int kx = 0; kx < k; ++kx) {
                        int sx = ox * stride + kx - pad;
                        row[idx++] = (sx < 0 || sx >= iw) ? 0.0f : xr[sx];
                    }
                }
            }
        }
    }

    Tensor y({out_ch, oh, ow});
    const float* wp = w->w.data();
    for (int oc = 0; oc < out_ch; ++oc) {
        const float* wr = wp + static_cast<size_t>(oc) * cols;
        const float bias = b->w[oc];
        float* yr = y.data() + static_cast<size_t>(oc) * pixels;
        for (int p = 0; p < pixels; ++p) {
            const float* cr = cp + static_cast<size_t>(p) * cols;
            float acc = bias;
            for (int c = 0; c < cols; ++c) acc += wr[c] * cr[c];
            yr[p] = acc;
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
    const int cols = in_ch * k * k;
    const int pixels = oh * ow;
    if (gy.ndim() != 3 || gy.dim(0) != out_ch || gy.dim(1) != oh || gy.dim(2) != ow)
        throw std::invalid_argument("Conv2d " + w->name + ": bad grad shape");

    if (w->trainable) {
        float* gw = w->g.data();
        float* gb = b->g.data();
        const float* cp = col.data();
        for (int oc = 0; oc < out_ch; ++oc) {
            const float* gr = gy.data() + static_cast<size_t>(oc) * pixels;
            float* gwr = gw + static_cast<size_t>(oc) * cols;
            float bacc = 0.0f;
            for (int p = 0; p < pixels; ++p) {
                const float gv = gr[p];
                bacc += gv;
                const float* cr = cp + static_cast<size_t>(p) * cols;
                for (int c = 0; c < cols; ++c) gwr[c] += gv * cr[c];
            }
            gb[oc] += bacc;
        }
    }

    // dcol = gy^T * w, then scatter back (col2im)
    Tensor dcol({pixels, cols});
    const float* wp = w->w.data();
    for (int p = 0; p < pixels; ++p) {
        float* dr = dcol.data() + static_cast<size_t>(p) * cols;
        for (int oc = 0; oc < out_ch; ++oc) {
            const float gv = gy.data()[static_cast<size_t>(oc) * pixels + p];
            if (gv == 0.0f) continue;
            const float* wr = wp + static_cast<size_t>(oc) * cols;
            for (int c = 0; c < cols; ++c) dr[c] += gv * wr[c];
        }
    }

    Tensor gx({in_ch, ih, iw});
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* dr = dcol.data() + (static_cast<size_t>(oy) * ow + ox) * cols;
            int idx = 0;
            for (int ic = 0; ic < in_ch; ++ic) {
                float* xc = gx.data() + static_cast<size_t>(ic) * ih * iw;
                for (int ky = 0; ky < k; ++ky) {
                    int sy = oy * stride + ky - pad;
                    if (sy < 0 || sy >= ih) {
                        idx += k;
                        continue;
                    }
                    float* xr = xc + static_cast<size_t>(sy) * iw;
                    for (int kx = 0; kx < k; ++kx) {
                        int sx = ox * stride + kx - pad;
                        if (sx >= 0 && sx < iw) xr[sx] += dr[idx];
                        ++idx;
                    }
                }
            }
        }
    }
    return gx;
}

// ------------------------------------------------------------------ Linear

Linear::Linear(ParamSet& reg, const std::string& name, int in_dim_, int out_dim_, Pcg32& rng,
               bool zero_init)
    : in_dim(in_dim_), out_dim(out_dim_) {
    w = reg.add(name + ".w", {out_dim, in_dim});
    b = reg.add(name + ".b", {out_dim});
    if (!zero_init) init_kaiming(*w, in_dim, rng);
}

Tensor Linear::forward(const Tensor& x) {
    bool vec = x.ndim() == 1;
    int n = vec ? 1 : x.dim(0);
    if ((vec ? x.dim(0) : x.dim(1)) != in_dim)
        throw std::invalid_argument("Linear " + w->name + ": bad input shape " + x.shape_str());
    x_cache = x;
    Tensor y(vec ? std::vector<int>{out_dim} : std::vector<int>{n, out_dim});
    const float* wp = w->w.data();
    for (int i = 0; i < n; ++i) {
        const float* xr = x.data() + static_cast<size_t>(i) * in_dim;
        float* yr = y.data() + static_cast<size_t>(i) * out_dim;
        for (int j = 0; j < out_dim; ++j) {
            const float* wr = wp + static_cast<size_t>(j) * in_dim;
            float acc = b->w[j];
            for (int c = 0; c < in_dim; ++c) acc += wr[c] * xr[c];
            yr[j] = acc;
        }
    }
    return y;
}

Tensor Linear::backward(const Tensor& gy) {
    bool vec = x_cache.ndim() == 1;
    int n = vec ? 1 : x_cache.dim(0);
    if (w->trainable) {
        float* gw = w->g.data();
        float* gb = b->g.data();
        for (int i = 0; i < n; ++i) {
            const float* xr = x_cache.data() + static_cast<size_t>(i) * in_dim;
            const float* gr = gy.data() + static_cast<size_t>(i) * out_dim;
            for (int j = 0; j < out_dim; ++j) {
                const float gv = gr[j];
                gb[j] += gv;
                float* gwr = gw + static_cast<size_t>(j) * in_dim;
                for (int c = 0; c < in_dim; ++c) gwr[c] += gv * xr[c];
            }
        }
    }
    Tensor gx(x_cache.shape);
    const float* wp = w->w.data();
    for (int i = 0; i < n; ++i) {
        const float* gr = gy.data() + static_cast<size_t>(i) * out_dim;
        float* gxr = gx.data() + static_cast<size_t>(i) * in_dim;
        for (int j = 0; j < out_dim; ++j) {
            const float gv = gr[j];
            const float* wr = wp + static_cast<size_t>(j) * in_dim;
            for (int c = 0; c < in_dim; ++c) gxr[c] += gv * wr[c];
        }
    }
    return gx;
}

// -------------------------------------------------------------------- SiLU

Tensor SiLU::forward(const Tensor& x) {
    x_cache = x;
    Tensor y(x.shape);
    for (size_t i = 0; i < x.size(); ++i) {
        float s = 1.0f / (1.0f + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
    return y;
}

Tensor SiLU::backward(const Tensor& gy) const {
    Tensor gx(x_cache.shape);
    for (size_t i = 0; i < gx.size(); ++i) {
        float s = 1.0f / (1.0f + std::exp(-x_cache[i]));
        gx[i] = gy[i] * (s + x_cache[i] * s * (1.0f - s));
    }
    return gx;
}

// --------------------------------------------------------------- GroupNorm

GroupNorm::GroupNorm(ParamSet& reg, const std::string& name, int ch_, int groups_)
    : ch(ch_), groups(groups_) {
    if (ch % groups != 0) throw std::invalid_argument("GroupNorm: channels not divisible");
    gamma = reg.add(name + ".gamma", {ch});
    beta = reg.add(name + ".beta", {ch});
    gamma->w.fill(1.0f);
}

Tensor GroupNorm::forward(const Tensor& x) {
    if (x.ndim() != 3 || x.dim(0) != ch)
        throw std::invalid_argument("GroupNorm: bad input " + x.shape_str());
    const int hw = x.dim(1) * x.dim(2);
    const int cpg = ch / groups;
    const size_t gn = static_cast<size_t>(cpg) * hw;

    xhat = Tensor(x.shape);
    inv_std.assign(groups, 0.0f);
    Tensor y(x.shape);
    for (int g = 0; g < groups; ++g) {
        const float* xs = x.data() + static_cast<size_t>(g) * gn;
        double mean = 0.0;
        for (size_t i = 0; i < gn; ++i) mean += xs[i];
        mean /= static_cast<double>(gn);
        double var = 0.0;
        for (size_t i = 0; i < gn; ++i) {
            double d = xs[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(gn);
        float is = static_cast<float>(1.0 / std::sqrt(var + eps));
        inv_std[g] = is;
        float* xh = xhat.data() + static_cast<size_t>(g) * gn;
        float* yp = y.data() + static_cast<size_t>(g) * gn;
        for (int c = 0; c < cpg; ++c) {
            const float ga = gamma->w[g * cpg + c];
            const float be = beta->w[g * cpg + c];
            for (int i = 0; i < hw; ++i) {
                size_t idx = static_cast<size_t>(c) * hw + i;
                float v = (xs[idx] - static_cast<float>(mean)) * is;
                xh[idx] = v;
                yp[idx] = ga * v + be;
            }
        }
    }
    return y;
}

Tensor GroupNorm::backward(const Tensor& gy) {
    const int hw = xhat.dim(1) * xhat.dim(2);
    const int cpg = ch / groups;
    const size_t gn = static_cast<size_t>(cpg) * hw;

    Tensor gx(xhat.shape);
    for (int g = 0; g < groups; ++g) {
        const float* xh = xhat.data() + static_cast<size_t>(g) * gn;
        const float* gyp = gy.data() + static_cast<size_t>(g) * gn;
        // dxhat and the two reduction terms
        double sum_dxh = 0.0, sum_dxh_xh = 0.0;
        for (int c = 0; c < cpg; ++c) {
            const float ga = gamma->w[g * cpg + c];
            for (int i = 0; i < hw; ++i) {
                size_t idx = static_cast<size_t>(c) * hw + i;
                double dxh = static_cast<double>(gyp[idx]) * ga;
                sum_dxh += dxh;
                sum_dxh_xh += dxh * xh[idx];
            }
        }
        if (gamma->trainable) {
            for (int c = 0; c < cpg; ++c) {
                double gg = 0.0, gb = 0.0;
                for (int i = 0; i < hw; ++i) {
                    size_t idx = static_cast<size_t>(c) * hw + i;
                    gg += static_cast<double>(gyp[idx]) * xh[idx];
                    gb += gyp[idx];
                }
                gamma->g[g * cpg + c] += static_cast<float>(gg);
                beta->g[g * cpg + c] += static_cast<float>(gb);
            }
        }
        const double n = static_cast<double>(gn);
        const float is = inv_std[g];
        float* gxp = gx.data() + static_cast<size_t>(g) * gn;
        for (int c = 0; c < cpg; ++c) {
            const float ga = gamma->w[g * cpg + c];
            for (int i = 0; i < hw; ++i) {
                size_t idx = static_cast<size_t>(c) * hw + i;
                double dxh = static_cast<double>(gyp[idx]) * ga;
                gxp[idx] = static_cast<float>(is * (dxh - sum_dxh / n - xh[idx] * sum_dxh_xh / n));
            }
        }
    }
    return gx;
}

// --------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(ParamSet& reg, const std::string& name, int dim_) : dim(dim_) {
    gamma = reg.add(name + ".gamma", {dim});
    beta = reg.add(name + ".beta", {dim});
    gamma->w.fill(1.0f);
}

Tensor LayerNorm::forward(const Tensor& x) {
    if (x.ndim() != 2 || x.dim(1) != dim)
        throw std::invalid_argument("LayerNorm: bad input " + x.shape_str());
    int n = x.dim(0);
    xhat = Tensor(x.shape);
    inv_std.assign(static_cast<size_t>(n), 0.0f);
    Tensor y(x.shape);
    for (int i = 0; i < n; ++i) {
        const float* xr = x.data() + static_cast<size_t>(i) * dim;
        double mean = 0.0;
        for (int j = 0; j < dim; ++j) mean += xr[j];
        mean /= dim;
        double var = 0.0;
        for (int j = 0; j < dim; ++j) {
            double d = xr[j] - mean;
            var += d * d;
        }
        var /= dim;
        float is = static_cast<float>(1.0 / std::sqrt(var + eps));
        inv_std[static_cast<size_t>(i)] = is;
        float* xh = xhat.data() + static_cast<size_t>(i) * dim;
        float* yr = y.data() + static_cast<size_t>(i) * dim;
        for (int j = 0; j < dim; ++j) {
            xh[j] = (xr[j] - static_cast<float>(mean)) * is;
            yr[j] = gamma->w[j] * xh[j] + beta->w[j];
        }
    }
    return y;
}

Tensor LayerNorm::backward(const Tensor& gy) {
    int n = xhat.dim(0);
    Tensor gx(xhat.shape);
    for (int i = 0; i < n; ++i) {
        const float* xh = xhat.data() + static_cast<size_t>(i) * dim;
        const float* gr = gy.data() + static_cast<size_t>(i) * dim;
        double sum_dxh = 0.0, sum_dxh_xh = 0.0;
        for (int j = 0; j < dim; ++j) {
            double dxh = static_cast<double>(gr[j]) * gamma->w[j];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh[j];
        }
        if (gamma->trainable) {
            for (int j = 0; j < dim; ++j) {
                gamma->g[j] += gr[j] * xh[j];
                beta->g[j] += gr[j];
            }
        }
        const float is = inv_std[static_cast<size_t>(i)];
        float* gxr = gx.data() + static_cast<size_t>(i) * dim;
        for (int j = 0; j < dim; ++j) {
            double dxh = static_cast<double>(gr[j]) * gamma->w[j];
            gxr[j] = static_cast<float>(is * (dxh - sum_dxh / dim - xh[j] * sum_dxh_xh / dim));
        }
    }
    return gx;
}

// -------------------------------------------------------------- Upsample2x

Tensor Upsample2x::forward(const Tensor& x) {
    int c = x.dim(0);
    ih = x.dim(1);
    iw = x.dim(2);
    Tensor y({c, ih * 2, iw * 2});
    for (int cc = 0; cc < c; ++cc)
        for (int yy = 0; yy < ih * 2; ++yy)
            for (int xx = 0; xx < iw * 2; ++xx)
                y.at(cc, yy, xx) = x.at(cc, yy / 2, xx / 2);
    return y;
}

Tensor Upsample2x::backward(const Tensor& gy) const {
    int c = gy.dim(0);
    Tensor gx({c, ih, iw});
    for (int cc = 0; cc < c; ++cc)
        for (int yy = 0; yy < ih * 2; ++yy)
            for (int xx = 0; xx < iw * 2; ++xx) gx.at(cc, yy / 2, xx / 2) += gy.at(cc, yy, xx);
    return gx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
        throw std::invalid_argument("concat_channels: spatial mismatch");
    Tensor y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::copy(a.v.begin(), a.v.end(), y.v.begin());
    std::copy(b.v.begin(), b.v.end(), y.v.begin() + static_cast<long>(a.size()));
    return y;
}

void split_channels(const Tensor& g, int ca, Tensor& ga, Tensor& gb) {
    ga = Tensor({ca, g.dim(1), g.dim(2)});
    gb = Tensor({g.dim(0) - ca, g.dim(1), g.dim(2)});
    std::copy(g.v.begin(), g.v.begin() + static_cast<long>(ga.size()), ga.v.begin());
    std::copy(g.v.begin() + static_cast<long>(ga.size()), g.v.end(), gb.v.begin());
}

// --------------------------------------------------------------- attention

Tensor attention_forward(const Tensor& Q, const Tensor& K, const Tensor& V, Tensor& A_out) {
    int n = Q.dim(0), d = Q.dim(1), m = K.dim(0);
    if (K.dim(1) != d || V.dim(0) != m)
        throw std::invalid_argument("attention_forward: inconsistent dimensions");
    const float scale = 1.0f / std::sqrt(static_cast<float>(d));
    A_out = Tensor({n, m});
    for (int i = 0; i < n; ++i) {
        const float* qr = Q.data() + static_cast<size_t>(i) * d;
        float* ar = A_out.data() + static_cast<size_t>(i) * m;
        float mx = -1e30f;
        for (int j = 0; j < m; ++j) {
            const float* kr = K.data() + static_cast<size_t>(j) * d;
            float z = 0.0f;
            for (int c = 0; c < d; ++c) z += qr[c] * kr[c];
            z *= scale;
            if (!std::isfinite(z)) throw std::runtime_error("attention_forward: non-finite logit");
            ar[j] = z;
            mx = std::max(mx, z);
        }
        double denom = 0.0;
        for (int j = 0; j < m; ++j) {
            ar[j] = std::exp(ar[j] - mx);
            denom += ar[j];
        }
        for (int j = 0; j < m; ++j) ar[j] = static_cast<float>(ar[j] / denom);
    }
    int dv = V.dim(1);
    Tensor O({n, dv});
    for (int i = 0; i < n; ++i) {
        const float* ar = A_out.data() + static_cast<size_t>(i) * m;
        float* orow = O.data() + static_cast<size_t>(i) * dv;
        for (int j = 0; j < m; ++j) {
            const float a = ar[j];
            const float* vr = V.data() + static_cast<size_t>(j) * dv;
            for (int c = 0; c < dv; ++c) orow[c] += a * vr[c];
        }
    }
    return O;
}

void attention_backward(const Tensor& dO, const Tensor& Q, const Tensor& K, const Tensor& V,
                        const Tensor& A, Tensor& dQ, Tensor& dK, Tensor& dV) {
    int n = Q.dim(0), d = Q.dim(1), m = K.dim(0), dv = V.dim(1);
    const float scale = 1.0f / std::sqrt(static_cast<float>(d));
    if (dQ.empty()) dQ = Tensor(Q.shape);
    if (dK.empty()) dK = Tensor(K.shape);
    if (dV.empty()) dV = Tensor(V.shape);

    Tensor dA({n, m});
    for (int i = 0; i < n; ++i) {
        const float* dor = dO.data() + static_cast<size_t>(i) * dv;
        const float* ar = A.data() + static_cast<size_t>(i) * m;
        float* dar = dA.data() + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const float* vr = V.data() + static_cast<size_t>(j) * dv;
            float acc = 0.0f;
            for (int c = 0; c < dv; ++c) acc += dor[c] * vr[c];
            dar[j] = acc;
            float* dvr = dV.data() + static_cast<size_t>(j) * dv;
            const float a = ar[j];
            for (int c = 0; c < dv; ++c) dvr[c] += a * dor[c];
        }
        // softmax backward: dZ = A * (dA - sum(dA*A))
        double dot = 0.0;
        for (int j = 0; j < m; ++j) dot += static_cast<double>(dar[j]) * ar[j];
        for (int j = 0; j < m; ++j) dar[j] = ar[j] * (dar[j] - static_cast<float>(dot));
        // dQ, dK through Z = scale * Q K^T
        float* dqr = dQ.data() + static_cast<size_t>(i) * d;
        const float* qr = Q.data() + static_cast<size_t>(i) * d;
        for (int j = 0; j < m; ++j) {
            const float dz = dar[j] * scale;
            if (dz == 0.0f) continue;
            const float* kr = K.data() + static_cast<size_t>(j) * d;
            float* dkr = dK.data() + static_cast<size_t>(j) * d;
            for (int c = 0; c < d; ++c) {
                dqr[c] += dz * kr[c];
                dkr[c] += dz * qr[c];
            }
        }
    }
}

// ---------------------------------------------------- decoupled attention

CrossAttention::CrossAttention(ParamSet& reg, const std::string& name, const std::string& id_name,
                               int ch_, int d_ctx_, int d_id_, Pcg32& rng)
    : ch(ch_), d_ctx(d_ctx_), d_id(d_id_), ln(reg, name + ".ln", ch_) {
    w_q = reg.add(name + ".wq", {ch, ch});
    w_k = reg.add(name + ".wk", {ch, d_ctx});
    w_v = reg.add(name + ".wv", {ch, d_ctx});
    w_o = reg.add(name + ".wo", {ch, ch});
    b_o = reg.add(name + ".bo", {ch});
    init_kaiming(*w_q, ch, rng);
    init_kaiming(*w_k, d_ctx, rng);
    init_kaiming(*w_v, d_ctx, rng);
    init_kaiming(*w_o, ch, rng);
    // identity projections start at exactly zero
    w_k_id = reg.add(id_name + ".wk", {ch, d_id});
    w_v_id = reg.add(id_name + ".wv", {ch, d_id});
}

namespace {

// y[n][j] = sum_c x[n][c] * W[j][c]
Tensor project(const Tensor& x, const Tensor& w) {
    int n = x.dim(0), in = x.dim(1), out = w.dim(0);
    Tensor y({n, out});
    for (int i = 0; i < n; ++i) {
        const float* xr = x.data() + static_cast<size_t>(i) * in;
        float* yr = y.data() + static_cast<size_t>(i) * out;
        for (int j = 0; j < out; ++j) {
            const float* wr = w.data() + static_cast<size_t>(j) * in;
            float acc = 0.0f;
            for (int c = 0; c < in; ++c) acc += wr[c] * xr[c];
            yr[j] = acc;
        }
    }
    return y;
}

// accumulate gw[j][c] += sum_n gy[n][j] x[n][c]; gx[n][c] += sum_j gy[n][j] w[j][c]
void project_backward(const Tensor& gy, const Tensor& x, const Tensor& w, Tensor& gw,
                      Tensor& gx, bool want_gw) {
    int n = x.dim(0), in = x.dim(1), out = w.dim(0);
    for (int i = 0; i < n; ++i) {
        const float* gr = gy.data() + static_cast<size_t>(i) * out;
        const float* xr = x.data() + static_cast<size_t>(i) * in;
        float* gxr = gx.data() + static_cast<size_t>(i) * in;
        for (int j = 0; j < out; ++j) {
            const float gv = gr[j];
            if (gv == 0.0f) continue;
            const float* wr = w.data() + static_cast<size_t>(j) * in;
            for (int c = 0; c < in; ++c) gxr[c] += gv * wr[c];
            if (want_gw) {
                float* gwr = gw.data() + static_cast<size_t>(j) * in;
                for (int c = 0; c < in; ++c) gwr[c] += gv * xr[c];
            }
        }
    }
}

Tensor chw_to_tokens(const Tensor& x) {
    int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor t({h * w, c});
    for (int cc = 0; cc < c; ++cc)
        for (int p = 0; p < h * w; ++p) t.data()[static_cast<size_t>(p) * c + cc] =
            x.data()[static_cast<size_t>(cc) * h * w + p];
    return t;
}

Tensor tokens_to_chw(const Tensor& t, int c, int h, int w) {
    Tensor x({c, h, w});
    for (int cc = 0; cc < c; ++cc)
        for (int p = 0; p < h * w; ++p) x.data()[static_cast<size_t>(cc) * h * w + p] =
            t.data()[static_cast<size_t>(p) * c + cc];
    return x;
}

}  // namespace

Tensor CrossAttention::forward(const Tensor& x, const Tensor& ctx, const Tensor* id_tokens) {
    hh = x.dim(1);
    ww = x.dim(2);
    tok = chw_to_tokens(x);
    h = ln.forward(tok);
    ctx_cache = ctx;
    Q = project(h, w_q->w);
    K = project(ctx, w_k->w);
    V = project(ctx, w_v->w);
    O = attention_forward(Q, K, V, A);
    used_id = id_tokens != nullptr;
    if (used_id) {
        id_cache = *id_tokens;
        Kp = project(*id_tokens, w_k_id->w);
        Vp = project(*id_tokens, w_v_id->w);
        Tensor O2 = attention_forward(Q, Kp, Vp, Ap);
        for (size_t i = 0; i < O.size(); ++i) O[i] += O2[i];
    }
    // y = tok + O * Wo^T + bo
    Tensor proj = project(O, w_o->w);
    Tensor y(tok.shape);
    int n = tok.dim(0);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < ch; ++c) {
            size_t idx = static_cast<size_t>(i) * ch + c;
            y[idx] = tok[idx] + proj[idx] + b_o->w[c];
        }
    return tokens_to_chw(y, ch, hh, ww);
}

Tensor CrossAttention::backward(const Tensor& gy, Tensor& d_ctx, Tensor* d_id) {
    Tensor gt = chw_to_tokens(gy);
    int n = gt.dim(0);

    // through output projection
    Tensor dO({n, ch});
    project_backward(gt, O, w_o->w, w_o->g, dO, w_o->trainable);
    if (b_o->trainable) {
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < ch; ++c) b_o->g[c] += gt.data()[static_cast<size_t>(i) * ch + c];
    }

    Tensor dQ(Q.shape), dK(K.shape), dV(V.shape);
    attention_backward(dO, Q, K, V, A, dQ, dK, dV);
    if (used_id) {
        Tensor dKp(Kp.shape), dVp(Vp.shape);
        attention_backward(dO, Q, Kp, Vp, Ap, dQ, dKp, dVp);
        if (d_id) {
            project_backward(dKp, *reinterpret_cast<const Tensor*>(nullptr) == *d_id ? *d_id : *d_id, w_k_id->w, w_k_id->g, *d_id, w_k_id->trainable);
        }
    }

    // context projections
    project_backward(dK, ctx_cache_, w_k->w, w_k->g, d_ctx, w_k->trainable);
    project_backward(dV, ctx_cache_, w_v->w, w_v->g, d_ctx, w_v->trainable);

    // query projection into normalized tokens
    Tensor dh({n, ch});
    project_backward(dQ, h, w_q->w, w_q->g, dh, w_q->trainable);
    Tensor dtok = ln.backward(dh);
    for (size_t i = 0; i < dtok.size(); ++i) dtok[i] += gt[i];
    return tokens_to_chw(dtok, ch, hh, ww);
}

// ----------------------------------------------------------- time embedding

TimeEmbedding::TimeEmbedding(ParamSet& reg, const std::string& name, int base_dim_, int out_dim_,
                             Pcg32& rng)
    : base_dim(base_dim_), out_dim(out_dim_) {
    l1 = Linear(reg, name + ".l1", base_dim, out_dim, rng);
    l2 = Linear(reg, name + ".l2", out_dim, out_dim, rng);
}

Tensor TimeEmbedding::forward(int t) {
    Tensor base({base_dim});
    int half = base_dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
        base[2 * i] = static_cast<float>(std::sin(t * freq));
        base[2 * i + 1] = static_cast<float>(std::cos(t * freq));
    }
    base_cache = base;
    return l2.forward(act.forward(l1.forward(base)));
}

void TimeEmbedding::backward(const Tensor& d_temb) {
    l1.backward(act.backward(l2.backward(d_temb)));
}

// ------------------------------------------------------------------ ResBlock

ResBlock::ResBlock(ParamSet& reg, const std::string& name, int c_in_, int c_out_, int temb_dim,
                   Pcg32& rng)
    : c_in(c_in_), c_out(c_out_) {
    int groups = 8;
    gn1 = GroupNorm(reg, name + ".gn1", c_in, std::gcd(groups, c_in));
    gn2 = GroupNorm(reg, name + ".gn2", c_out, std::gcd(groups, c_out));
    conv1 = Conv2d(reg, name + ".conv1", c_in, c_out, 3, 1, 1, rng);
    conv2 = Conv2d(reg, name + ".conv2", c_out, c_out, 3, 1, 1, rng);
    temb_proj = Linear(reg, name + ".temb", temb_dim, c_out, rng);
    has_skip = c_in != c_out;
    if (has_skip) skip = Conv2d(reg, name + ".skip", c_in, c_out, 1, 1, 0, rng);
}

Tensor ResBlock::forward(const Tensor& x, const Tensor& temb) {
    x_cache = x;
    Tensor h1 = conv1.forward(a1.forward(gn1.forward(x)));
    Tensor tvec = temb_proj.forward(at.forward(temb));
    int hw = h1.dim(1) * h1.dim(2);
    for (int c = 0; c < c_out; ++c) {
        float add = tvec[static_cast<size_t>(c)];
        float* hp = h1.data() + static_cast<size_t>(c) * hw;
        for (int i = 0; i < hw; ++i) hp[i] += add;
    }
    Tensor h2 = conv2.forward(a2.forward(gn2.forward(h1)));
    Tensor s = has_skip ? skip.forward(x) : x;
    for (size_t i = 0; i < h2.size(); ++i) h2[i] += s[i];
    return h2;
}

Tensor ResBlock::backward(const Tensor& gy, Tensor& d_temb) {
    Tensor dh1 = gn2.backward(a2.backward(conv2.backward(gy)));
    // time projection gradient: sum over spatial positions
    int hw = dh1.dim(1) * dh1.dim(2);
    Tensor dt({c_out});
    for (int c = 0; c < c_out; ++c) {
        const float* hp = dh1.data() + static_cast<size_t>(c) * hw;
        double acc = 0.0;
        for (int i = 0; i < hw; ++i) acc += hp[i];
        dt[static_cast<size_t>(c)] = static_cast<float>(acc);
    }
    Tensor d_temb_local = at.backward(temb_proj.backward(dt));
    for (size_t i = 0; i < d_temb.size(); ++i) d_temb[i] += d_temb_local[i];

    Tensor gx = gn1.backward(a1.backward(conv1.backward(dh1)));
    if (has_skip) {
        Tensor gs = skip.backward(gy);
        for (size_t i = 0; i < gx.size(); ++i) gx[i] += gs[i];
    } else {
        for (size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
    }
    return gx;
}

// ---------------------------------------------------------------------- Adam

void Adam::step(ParamSet& params) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (auto& p : params.items) {
        if (!p->trainable) continue;
        float* w = p->w.data();
        float* g = p->g.data();
        float* m = p->adam_m.data();
        float* v = p->adam_v.data();
        for (size_t i = 0; i < p->w.size(); ++i) {
            m[i] = static_cast<float>(beta1 * m[i] + (1.0 - beta1) * g[i]);
            v[i] = static_cast<float>(beta2 * v[i] + (1.0 - beta2) * static_cast<double>(g[i]) * g[i]);
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            w[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

}  // namespace ridfr
