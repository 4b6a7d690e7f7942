#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ridfr/rng.hpp"
#include "ridfr/tensor.hpp"

namespace ridfr {

// A named weight with its gradient and Adam state. Layers hold Params by
// shared_ptr, so copying a module yields a replica with shared weights but
// private activation caches; the alignment stage runs its two forward
// passes on such replicas and lets both accumulate into the same gradient
// buffers.
struct Param {
    std::string name;
    Tensor w, g, adam_m, adam_v;
    bool trainable = true;

    Param(std::string n, std::vector<int> shape)
        : name(std::move(n)), w(shape), g(shape), adam_m(shape), adam_v(shape) {}

    void zero_grad() { g.fill(0.0f); }
};

using ParamPtr = std::shared_ptr<Param>;

struct ParamSet {
    std::vector<ParamPtr> items;

    ParamPtr add(const std::string& name, std::vector<int> shape);
    void adopt(const ParamPtr& p) { items.push_back(p); }
    void extend(const ParamSet& other) {
        items.insert(items.end(), other.items.begin(), other.items.end());
    }
    ParamPtr find(const std::string& name) const;
    void zero_grads() {
        for (auto& p : items) p->zero_grad();
    }
    void set_trainable(bool t) {
        for (auto& p : items) p->trainable = t;
    }
    void set_trainable_prefix(const std::string& prefix, bool t);
    size_t count() const;
    uint64_t weights_hash() const;
    uint64_t weights_hash_prefix(const std::string& prefix) const;
};

// He-style fan-in scaled normal init.
void init_kaiming(Param& p, int fan_in, Pcg32& rng);
void init_normal(Param& p, float stddev, Pcg32& rng);

// --------------------------------------------------------------- layers

struct Conv2d {
    int in_ch = 0, out_ch = 0, k = 1, stride = 1, pad = 0;
    ParamPtr w, b;
    Tensor col;  // im2col cache (pixels x in_ch*k*k)
    int oh = 0, ow = 0, ih = 0, iw = 0;

    Conv2d() = default;
    Conv2d(ParamSet& reg, const std::string& name, int in_ch, int out_ch, int k, int stride,
           int pad, Pcg32& rng, bool zero_init = false);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
};

struct Linear {
    int in_dim = 0, out_dim = 0;
    ParamPtr w, b;
    Tensor x_cache;

    Linear() = default;
    Linear(ParamSet& reg, const std::string& name, int in_dim, int out_dim, Pcg32& rng,
           bool zero_init = false);

    // x: (N, in) or (in); output keeps the rank
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
};

struct SiLU {
    Tensor x_cache;
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy) const;
};

struct GroupNorm {
    int ch = 0, groups = 1;
    float eps = 1e-5f;
    ParamPtr gamma, beta;
    Tensor xhat;
    std::vector<float> inv_std;

    GroupNorm() = default;
    GroupNorm(ParamSet& reg, const std::string& name, int ch, int groups);

    Tensor forward(const Tensor& x);  // (C,H,W)
    Tensor backward(const Tensor& gy);
};

struct LayerNorm {
    int dim = 0;
    float eps = 1e-5f;
    ParamPtr gamma, beta;
    Tensor xhat;
    std::vector<float> inv_std;

    LayerNorm() = default;
    LayerNorm(ParamSet& reg, const std::string& name, int dim);

    Tensor forward(const Tensor& x);  // (N,D)
    Tensor backward(const Tensor& gy);
};

struct Upsample2x {
    int ih = 0, iw = 0;
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy) const;
};

Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& g, int ca, Tensor& ga, Tensor& gb);

// Decoupled cross-attention block: pre-norm single-head attention of the
// spatial tokens against a context sequence (frozen base projections) plus,
// when identity tokens are supplied, a second attention term through
// separate zero-initialized projections. The two terms share queries and
// are summed before the output projection.
struct CrossAttention {
    int ch = 0, d_ctx = 0, d_id = 0;
    LayerNorm ln;
    ParamPtr w_q, w_k, w_v, w_o, b_o;
    ParamPtr w_k_id, w_v_id;  // zero-initialized, "newly injected"

    // caches
    Tensor tok, h, Q, K, V, A, Kp, Vp, Ap, O;
    Tensor ctx_cache, id_cache;
    bool used_id = false;
    int hh = 0, ww = 0;

    CrossAttention() = default;
    CrossAttention(ParamSet& reg, const std::string& name, const std::string& id_name, int ch,
                   int d_ctx, int d_id, Pcg32& rng);

    Tensor forward(const Tensor& x, const Tensor& ctx, const Tensor* id_tokens);
    // returns dx; accumulates d_ctx (and d_id when identity tokens were used)
    Tensor backward(const Tensor& gy, Tensor& d_ctx, Tensor* d_id);
};

// Pure attention used by tests and the identity resampler:
// softmax(Q K^T / sqrt(d)) V with full backward.
Tensor attention_forward(const Tensor& Q, const Tensor& K, const Tensor& V, Tensor& A_out);
void attention_backward(const Tensor& dO, const Tensor& Q, const Tensor& K, const Tensor& V,
                        const Tensor& A, Tensor& dQ, Tensor& dK, Tensor& dV);

struct TimeEmbedding {
    int base_dim = 64, out_dim = 0;
    Linear l1, l2;
    SiLU act;
    Tensor base_cache;

    TimeEmbedding() = default;
    TimeEmbedding(ParamSet& reg, const std::string& name, int base_dim, int out_dim, Pcg32& rng);

    Tensor forward(int t);
    void backward(const Tensor& d_temb);
};

struct ResBlock {
    int c_in = 0, c_out = 0;
    GroupNorm gn1, gn2;
    SiLU a1, a2, at;
    Conv2d conv1, conv2, skip;
    Linear temb_proj;
    bool has_skip = false;
    Tensor x_cache;

    ResBlock() = default;
    ResBlock(ParamSet& reg, const std::string& name, int c_in, int c_out, int temb_dim,
             Pcg32& rng);

    Tensor forward(const Tensor& x, const Tensor& temb);
    Tensor backward(const Tensor& gy, Tensor& d_temb);
};

// --------------------------------------------------------------- optimizer

struct Adam {
    double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long t = 0;

    void step(ParamSet& params);
};

}  // namespace ridfr
