#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ridfr {

// Dense float32 array with a small dynamic shape. All model math in this
// project runs on per-sample tensors (no batch dimension); batches are
// accumulated by the training loops.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        v.assign(numel(shape), 0.0f);
    }
    Tensor(std::initializer_list<int> s) : Tensor(std::vector<int>(s)) {}

    static size_t numel(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
    int ndim() const { return static_cast<int>(shape.size()); }

    float* data() { return v.data(); }
    const float* data() const { return v.data(); }
    float& operator[](size_t i) { return v[i]; }
    float operator[](size_t i) const { return v[i]; }

    // CHW accessors for 3-d tensors.
    float& at(int c, int y, int x) {
        return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    float at(int c, int y, int x) const {
        return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }

    void fill(float x) { std::fill(v.begin(), v.end(), x); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape.size(); ++i)
            s += (i ? "," : "") + std::to_string(shape[i]);
        return s + ")";
    }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch " +
                                    a.shape_str() + " vs " + b.shape_str());
}

inline bool all_finite(const Tensor& t) {
    for (float x : t.v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace ridfr
