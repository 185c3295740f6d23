#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "alpeval/errors.hpp"
#include "alpeval/rng.hpp"
#include "alpeval/tensor.hpp"

namespace alpeval {

// Minimal differentiable feed-forward classifier: dense layers with ReLU
// hidden activations and linear output logits. Exact gradients with respect
// to both inputs and parameters, double precision throughout.

struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;  // widths of ReLU hidden layers; may be empty
    std::size_t num_classes = 0;

    void validate() const {
        if (input_dim < 1) throw ValidationError("model spec: input_dim must be >= 1");
        if (num_classes < 2) throw ValidationError("model spec: num_classes must be >= 2");
        for (std::size_t w : hidden)
            if (w < 1) throw ValidationError("model spec: hidden width must be >= 1");
    }

    /// Dimension chain input, hidden..., num_classes.
    std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims;
        dims.reserve(hidden.size() + 2);
        dims.push_back(input_dim);
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(num_classes);
        return dims;
    }

    std::size_t layer_count() const { return hidden.size() + 1; }

    bool operator==(const ModelSpec&) const = default;
};

/// Weight matrices (shape {out, in}, row-major) and bias vectors per layer.
/// Also the carrier for parameter-shaped gradients.
struct Parameters {
    ModelSpec spec;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
};

struct Example {
    Tensor x;
    std::size_t label = 0;
};

inline void check_input(const ModelSpec& spec, const Tensor& x) {
    if (x.size() != spec.input_dim)
        throw ValidationError("input has dimension " + std::to_string(x.size()) +
                              ", model expects " + std::to_string(spec.input_dim));
}

inline Parameters zeros_like(const ModelSpec& spec) {
    spec.validate();
    Parameters p;
    p.spec = spec;
    const auto dims = spec.layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        p.weights.push_back(Tensor::zeros({dims[l + 1], dims[l]}));
        p.biases.push_back(Tensor::zeros({dims[l + 1]}));
    }
    return p;
}

/// dst += c * src, layerwise.
inline void axpy_params(Parameters& dst, const Parameters& src, double c) {
    for (std::size_t l = 0; l < dst.weights.size(); ++l) {
        for (std::size_t i = 0; i < dst.weights[l].size(); ++i)
            dst.weights[l][i] += c * src.weights[l][i];
        for (std::size_t i = 0; i < dst.biases[l].size(); ++i)
            dst.biases[l][i] += c * src.biases[l][i];
    }
}

inline void scale_params(Parameters& p, double c) {
    for (auto& w : p.weights)
        for (double& v : w.data) v *= c;
    for (auto& b : p.biases)
        for (double& v : b.data) v *= c;
}

/// Zero-mean scaled-uniform init: weights from U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
/// biases zero. Draw order is fixed (layers in order, rows in order) so the
/// result is a pure function of (spec, seed).
inline Parameters init_params(const ModelSpec& spec, std::uint64_t seed) {
    Parameters p = zeros_like(spec);
    Rng rng(derive_seed(seed, Stream::init_weights));
    const auto dims = spec.layer_dims();
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (double& v : p.weights[l].data) v = rng.uniform(-scale, scale);
    }
    return p;
}

/// Activations recorded on the way up; inputs[l] feeds layer l (inputs[0] = x).
struct ForwardTrace {
    std::vector<Tensor> inputs;
    Tensor logits;
};

inline ForwardTrace forward_trace(const Parameters& params, const Tensor& x) {
    check_input(params.spec, x);
    const std::size_t layers = params.weights.size();
    ForwardTrace trace;
    trace.inputs.reserve(layers);
    trace.inputs.push_back(x);
    for (std::size_t l = 0; l < layers; ++l) {
        const Tensor& w = params.weights[l];
        const Tensor& b = params.biases[l];
        const Tensor& in = trace.inputs[l];
        const std::size_t out_dim = w.shape[0];
        const std::size_t in_dim = w.shape[1];
        Tensor z = Tensor::zeros({out_dim});
        for (std::size_t o = 0; o < out_dim; ++o) {
            double acc = b[o];
            const double* row = &w.data[o * in_dim];
            for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * in[i];
            z[o] = acc;
        }
        if (l + 1 < layers) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
            trace.inputs.push_back(std::move(z));
        } else {
            trace.logits = std::move(z);
        }
    }
    return trace;
}

inline Tensor forward_logits(const Parameters& params, const Tensor& x) {
    return forward_trace(params, x).logits;
}

struct Gradients {
    Parameters params;
    Tensor input;
};

/// Backpropagate an arbitrary d(loss)/d(logits) through the recorded trace.
/// ReLU derivative at exactly zero is taken as zero. Returns gradients with
/// respect to every weight, every bias, and the input.
inline Gradients backward(const Parameters& params, const ForwardTrace& trace,
                          const Tensor& dlogits) {
    Gradients g;
    g.params = zeros_like(params.spec);
    Tensor grad = dlogits;
    const std::size_t layers = params.weights.size();
    for (std::size_t l = layers; l-- > 0;) {
        const Tensor& w = params.weights[l];
        const Tensor& in = trace.inputs[l];
        const std::size_t out_dim = w.shape[0];
        const std::size_t in_dim = w.shape[1];
        Tensor& dw = g.params.weights[l];
        Tensor& db = g.params.biases[l];
        Tensor din = Tensor::zeros({in_dim});
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double go = grad[o];
            db[o] += go;
            const double* wrow = &w.data[o * in_dim];
            double* dwrow = &dw.data[o * in_dim];
            for (std::size_t i = 0; i < in_dim; ++i) {
                dwrow[i] += go * in[i];
                din[i] += wrow[i] * go;
            }
        }
        if (l > 0) {
            // in == relu(z) of the previous layer, so in > 0 iff z > 0.
            for (std::size_t i = 0; i < in_dim; ++i)
                if (!(in[i] > 0.0)) din[i] = 0.0;
        }
        grad = std::move(din);
    }
    g.input = std::move(grad);
    return g;
}

inline Tensor softmax(const Tensor& logits) {
    double m = logits[0];
    for (double v : logits.data) m = std::max(m, v);
    Tensor p = logits;
    double sum = 0.0;
    for (double& v : p.data) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : p.data) v /= sum;
    return p;
}

/// -log softmax(logits)[label], computed via the stable log-sum-exp.
inline double loss_xent(const Tensor& logits, std::size_t label) {
    if (label >= logits.size()) throw ValidationError("loss_xent: label out of range");
    double m = logits[0];
    for (double v : logits.data) m = std::max(m, v);
    double sum = 0.0;
    for (double v : logits.data) sum += std::exp(v - m);
    return m + std::log(sum) - logits[label];
}

/// d loss_xent / d logits = softmax(logits) - onehot(label).
inline Tensor xent_grad_logits(const Tensor& logits, std::size_t label) {
    if (label >= logits.size())
        throw ValidationError("xent_grad_logits: label out of range");
    Tensor g = softmax(logits);
    g[label] -= 1.0;
    return g;
}

/// Exact gradient of loss_xent(forward_logits(params, x), label_for_loss)
/// with respect to x.
inline Tensor grad_input(const Parameters& params, const Example& ex,
                         std::size_t label_for_loss) {
    ForwardTrace trace = forward_trace(params, ex.x);
    return backward(params, trace, xent_grad_logits(trace.logits, label_for_loss)).input;
}

/// Mean parameter gradient of loss_xent over a batch of (example, label) pairs.
inline Parameters grad_params(const Parameters& params,
                              const std::vector<std::pair<Example, std::size_t>>& batch) {
    if (batch.empty()) throw ValidationError("grad_params: empty batch");
    Parameters acc = zeros_like(params.spec);
    for (const auto& [ex, label] : batch) {
        ForwardTrace trace = forward_trace(params, ex.x);
        Gradients g = backward(params, trace, xent_grad_logits(trace.logits, label));
        axpy_params(acc, g.params, 1.0);
    }
    scale_params(acc, 1.0 / static_cast<double>(batch.size()));
    return acc;
}

enum class DistanceKind { squared_euclidean, euclidean };

/// Distance between two logit vectors; squared Euclidean by default.
inline double logit_distance(const Tensor& a, const Tensor& b,
                             DistanceKind kind = DistanceKind::squared_euclidean) {
    if (a.size() != b.size()) throw ValidationError("logit_distance: length mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return kind == DistanceKind::squared_euclidean ? sq : std::sqrt(sq);
}

/// Gradient of logit_distance with respect to its first argument; the
/// gradient with respect to the second is the negation. For the plain
/// Euclidean distance the subgradient at coincident inputs is zero.
inline Tensor logit_distance_grad(const Tensor& a, const Tensor& b,
                                  DistanceKind kind = DistanceKind::squared_euclidean) {
    if (a.size() != b.size())
        throw ValidationError("logit_distance_grad: length mismatch");
    Tensor g = Tensor::zeros({a.size()});
    if (kind == DistanceKind::squared_euclidean) {
        for (std::size_t i = 0; i < a.size(); ++i) g[i] = 2.0 * (a[i] - b[i]);
    } else {
        const double dist = logit_distance(a, b, DistanceKind::euclidean);
        if (dist > 0.0)
            for (std::size_t i = 0; i < a.size(); ++i) g[i] = (a[i] - b[i]) / dist;
    }
    return g;
}

/// Argmax of the logits; ties break toward the lowest class index.
inline std::size_t predict(const Parameters& params, const Tensor& x) {
    const Tensor logits = forward_logits(params, x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

}  // namespace alpeval
