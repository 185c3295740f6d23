#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "alpeval/errors.hpp"

namespace alpeval {

/// Flat numeric array plus shape, row-major. The universal value carrier for
/// inputs, logits, gradients and weight matrices.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
        : shape(std::move(shape_in)), data(std::move(data_in)) {
        if (element_count(shape) != data.size())
            throw ValidationError("tensor: shape does not match data length");
    }

    static std::size_t element_count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        const std::size_t n = element_count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    /// 1-D tensor from a value list.
    static Tensor row(std::vector<double> values) {
        const std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(),
                           [](double v) { return std::isfinite(v); });
    }
};

inline double linf_distance(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ValidationError("linf_distance: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline bool in_unit_box(const Tensor& t) {
    return std::all_of(t.data.begin(), t.data.end(),
                       [](double v) { return v >= 0.0 && v <= 1.0; });
}

inline Tensor clip01(Tensor t) {
    for (double& v : t.data) v = std::clamp(v, 0.0, 1.0);
    return t;
}

}  // namespace alpeval
