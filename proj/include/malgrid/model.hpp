#ifndef MALGRID_MODEL_HPP
#define MALGRID_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "malgrid/kernels.hpp"
#include "malgrid/rng.hpp"
#include "malgrid/tensor.hpp"

// Network description and the forward/backward passes over it. A model is
// a flat list of layers applied in order to a [side, side, 1] grayscale
// input; the two stock architectures differ only in their convolutional
// trunk. Everything is templated on the scalar type so the float model
// used in production can be mirrored in double for finite-difference
// verification.

namespace malgrid {

enum class LayerKind { Conv3x3, Relu, MaxPool2, Flatten, Dense, Softmax };

enum class Arch { Baseline, Improved };

enum class Backend { Serial, Parallel };

struct LayerSpec {
    LayerKind kind;
    int width = 0;  // output channels for Conv3x3, units for Dense; unused otherwise

    bool has_params() const {
        return kind == LayerKind::Conv3x3 || kind == LayerKind::Dense;
    }
};

std::string layer_kind_name(LayerKind kind);
std::string arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

std::vector<LayerSpec> layers_for(Arch arch, int num_classes);

// Output shape of every layer given the input shape; result[0] is the
// input shape itself and result[i + 1] is what layer i produces. Throws
// std::invalid_argument naming the first layer whose input is unusable
// (spatial extent too small for its window, or wrong rank).
std::vector<std::vector<int>> infer_shapes(const std::vector<LayerSpec>& layers,
                                           const std::vector<int>& input_shape);

template <typename T>
struct LayerParamsT {
    TensorT<T> weights;  // [3,3,cin,cout] for conv, [nin,nout] for dense
    TensorT<T> bias;     // [cout] / [nout]; both empty for parameterless layers
};

template <typename T>
struct ModelT {
    Arch arch = Arch::Baseline;
    int input_side = 0;
    int num_classes = 0;
    std::uint64_t seed = 0;
    Backend backend = Backend::Parallel;
    std::vector<LayerSpec> layers;
    std::vector<std::vector<int>> shapes;  // from infer_shapes, cached at build time
    std::vector<LayerParamsT<T>> params;   // one entry per layer
    std::vector<std::string> class_names;  // optional, size num_classes when set

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.weights.size() + p.bias.size();
        return n;
    }
};

using Model = ModelT<float>;

namespace detail {

template <typename T>
void he_uniform_fill(TensorT<T>& w, int fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = static_cast<T>((2.0 * rng.next_double() - 1.0) * limit);
}

}  // namespace detail

// Builds a model from an explicit layer stack; the stack must end in a
// softmax over a rank-1 activation. Weights draw from the uniform He
// interval [-sqrt(6/fan_in), sqrt(6/fan_in)], biases start at zero, and
// each layer gets its own stream derived from the model seed and the
// layer's position, so equal build arguments give identical models and
// layers never share draws.
template <typename T>
ModelT<T> build_custom_model(std::vector<LayerSpec> layers, int input_side,
                             std::uint64_t seed) {
    if (input_side < 1) throw std::invalid_argument("input side must be positive");
    if (layers.empty() || layers.back().kind != LayerKind::Softmax)
        throw std::invalid_argument("model must end in a softmax layer");
    ModelT<T> m;
    m.input_side = input_side;
    m.seed = seed;
    m.layers = std::move(layers);
    m.shapes = infer_shapes(m.layers, {input_side, input_side, 1});
    if (m.shapes.back().size() != 1)
        throw std::invalid_argument("model output must be rank-1");
    m.num_classes = m.shapes.back()[0];
    m.params.resize(m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const LayerSpec& spec = m.layers[i];
        if (!spec.has_params()) continue;
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const std::vector<int>& in_shape = m.shapes[i];
        if (spec.kind == LayerKind::Conv3x3) {
            const int cin = in_shape[2];
            m.params[i].weights = TensorT<T>::zeros({3, 3, cin, spec.width});
            detail::he_uniform_fill(m.params[i].weights, 9 * cin, rng);
        } else {
            const int nin = in_shape[0];
            m.params[i].weights = TensorT<T>::zeros({nin, spec.width});
            detail::he_uniform_fill(m.params[i].weights, nin, rng);
        }
        m.params[i].bias = TensorT<T>::zeros({spec.width});
    }
    return m;
}

template <typename T>
ModelT<T> build_model(Arch arch, int input_side, int num_classes, std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("need at least two classes");
    ModelT<T> m = build_custom_model<T>(layers_for(arch, num_classes), input_side, seed);
    m.arch = arch;
    return m;
}

// Activations recorded during a forward pass: x[i] is the tensor entering
// layer i, x[layers.size()] is the final output (class probabilities).
// Pool layers additionally record which input element won each window.
template <typename T>
struct ForwardTraceT {
    std::vector<TensorT<T>> x;
    std::vector<std::vector<std::int32_t>> argmax;
};

using ForwardTrace = ForwardTraceT<float>;

template <typename T>
const TensorT<T>& model_forward(const ModelT<T>& m, const TensorT<T>& input,
                                ForwardTraceT<T>& trace) {
    if (input.shape() != m.shapes.front()) {
        std::ostringstream os;
        os << "model expects input " << TensorT<T>::shape_string(m.shapes.front())
           << ", got " << TensorT<T>::shape_string(input.shape());
        throw std::invalid_argument(os.str());
    }
    const std::size_t L = m.layers.size();
    trace.x.resize(L + 1);
    trace.argmax.resize(L);
    for (std::size_t i = 0; i <= L; ++i)
        if (trace.x[i].shape() != m.shapes[i]) trace.x[i] = TensorT<T>::zeros(m.shapes[i]);
    std::copy(input.data(), input.data() + input.size(), trace.x[0].data());

    const bool par = m.backend == Backend::Parallel;
    for (std::size_t i = 0; i < L; ++i) {
        const TensorT<T>& in = trace.x[i];
        TensorT<T>& out = trace.x[i + 1];
        const std::vector<int>& s = m.shapes[i];
        switch (m.layers[i].kind) {
            case LayerKind::Conv3x3:
                if (par)
                    kernels::parallel::conv2d_forward(in.data(), s[0], s[1], s[2],
                                                      m.params[i].weights.data(),
                                                      m.layers[i].width,
                                                      m.params[i].bias.data(), out.data());
                else
                    kernels::serial::conv2d_forward(in.data(), s[0], s[1], s[2],
                                                    m.params[i].weights.data(),
                                                    m.layers[i].width,
                                                    m.params[i].bias.data(), out.data());
                break;
            case LayerKind::Relu:
                if (par)
                    kernels::parallel::relu_forward(in.data(), in.size(), out.data());
                else
                    kernels::serial::relu_forward(in.data(), in.size(), out.data());
                break;
            case LayerKind::MaxPool2:
                trace.argmax[i].resize(out.size());
                if (par)
                    kernels::parallel::maxpool2_forward(in.data(), s[0], s[1], s[2],
                                                        out.data(), trace.argmax[i].data());
                else
                    kernels::serial::maxpool2_forward(in.data(), s[0], s[1], s[2],
                                                      out.data(), trace.argmax[i].data());
                break;
            case LayerKind::Flatten:
                std::copy(in.data(), in.data() + in.size(), out.data());
                break;
            case LayerKind::Dense:
                if (par)
                    kernels::parallel::dense_forward(in.data(), s[0],
                                                     m.params[i].weights.data(),
                                                     m.layers[i].width,
                                                     m.params[i].bias.data(), out.data());
                else
                    kernels::serial::dense_forward(in.data(), s[0],
                                                   m.params[i].weights.data(),
                                                   m.layers[i].width,
                                                   m.params[i].bias.data(), out.data());
                break;
            case LayerKind::Softmax:
                kernels::softmax(in.data(), s[0], out.data());
                break;
        }
    }
    return trace.x.back();
}

template <typename T>
TensorT<T> model_forward(const ModelT<T>& m, const TensorT<T>& input) {
    ForwardTraceT<T> trace;
    return model_forward(m, input, trace);
}

// Parameter gradients, mirroring ModelT::params shape for shape.
template <typename T>
struct GradientsT {
    std::vector<LayerParamsT<T>> g;

    static GradientsT zeros_like(const ModelT<T>& m) {
        GradientsT out;
        out.g.resize(m.params.size());
        for (std::size_t i = 0; i < m.params.size(); ++i) {
            if (!m.layers[i].has_params()) continue;
            out.g[i].weights = TensorT<T>::zeros(m.params[i].weights.shape());
            out.g[i].bias = TensorT<T>::zeros(m.params[i].bias.shape());
        }
        return out;
    }
};

using Gradients = GradientsT<float>;

// Backpropagation for one sample. `trace` must come from model_forward on
// the same model, `target` is a strict one-hot vector over the classes.
// The cross-entropy/softmax pair collapses at the boundary: the gradient
// entering the last linear stack is simply probs - target. Gradients are
// written (not accumulated) into `grads`, which must be shaped like the
// model parameters.
template <typename T>
void model_backward(const ModelT<T>& m, const ForwardTraceT<T>& trace,
                    const TensorT<T>& target, GradientsT<T>& grads) {
    const std::size_t L = m.layers.size();
    if (L == 0 || m.layers.back().kind != LayerKind::Softmax)
        throw std::invalid_argument("model must end in a softmax layer");
    if (trace.x.size() != L + 1)
        throw std::invalid_argument("forward trace does not match model");
    if (target.shape() != m.shapes.back())
        throw std::invalid_argument("target shape does not match model output");
    int ones = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] == T(1)) ++ones;
        else if (target[i] != T(0))
            throw std::invalid_argument("target must be one-hot");
    }
    if (ones != 1) throw std::invalid_argument("target must be one-hot");
    if (grads.g.size() != L)
        throw std::invalid_argument("gradient buffer does not match model");

    const bool par = m.backend == Backend::Parallel;

    // d holds dLoss/d(input of layer i) as the loop walks layers in
    // reverse; seeded at the softmax boundary.
    TensorT<T> d = TensorT<T>::zeros(m.shapes[L - 1]);
    const TensorT<T>& probs = trace.x[L];
    for (std::size_t i = 0; i < probs.size(); ++i) d[i] = probs[i] - target[i];

    TensorT<T> dprev;
    for (std::size_t li = L - 1; li-- > 0;) {
        const TensorT<T>& in = trace.x[li];
        const std::vector<int>& s = m.shapes[li];
        const bool first = li == 0;
        if (dprev.shape() != s) dprev = TensorT<T>::zeros(s);
        switch (m.layers[li].kind) {
            case LayerKind::Conv3x3: {
                const int cout = m.layers[li].width;
                const int oh = s[0] - 2, ow = s[1] - 2;
                if (par)
                    kernels::parallel::conv2d_backward_params(
                        in.data(), s[0], s[1], s[2], d.data(), cout,
                        grads.g[li].weights.data(), grads.g[li].bias.data());
                else
                    kernels::serial::conv2d_backward_params(
                        in.data(), s[0], s[1], s[2], d.data(), cout,
                        grads.g[li].weights.data(), grads.g[li].bias.data());
                if (!first) {
                    if (par)
                        kernels::parallel::conv2d_backward_input(
                            m.params[li].weights.data(), s[2], cout, d.data(), oh, ow,
                            dprev.data(), s[0], s[1]);
                    else
                        kernels::serial::conv2d_backward_input(
                            m.params[li].weights.data(), s[2], cout, d.data(), oh, ow,
                            dprev.data(), s[0], s[1]);
                }
                break;
            }
            case LayerKind::Relu:
                if (par)
                    kernels::parallel::relu_backward(in.data(), d.data(), in.size(),
                                                     dprev.data());
                else
                    kernels::serial::relu_backward(in.data(), d.data(), in.size(),
                                                   dprev.data());
                break;
            case LayerKind::MaxPool2:
                if (par)
                    kernels::parallel::maxpool2_backward(trace.argmax[li].data(), d.size(),
                                                         d.data(), dprev.data(),
                                                         dprev.size());
                else
                    kernels::serial::maxpool2_backward(trace.argmax[li].data(), d.size(),
                                                       d.data(), dprev.data(), dprev.size());
                break;
            case LayerKind::Flatten:
                std::copy(d.data(), d.data() + d.size(), dprev.data());
                break;
            case LayerKind::Dense:
                if (par)
                    kernels::parallel::dense_backward(
                        in.data(), s[0], m.params[li].weights.data(), m.layers[li].width,
                        d.data(), first ? nullptr : dprev.data(),
                        grads.g[li].weights.data(), grads.g[li].bias.data());
                else
                    kernels::serial::dense_backward(
                        in.data(), s[0], m.params[li].weights.data(), m.layers[li].width,
                        d.data(), first ? nullptr : dprev.data(),
                        grads.g[li].weights.data(), grads.g[li].bias.data());
                break;
            case LayerKind::Softmax:
                throw std::invalid_argument("softmax may only appear as the last layer");
        }
        if (first) break;
        std::swap(d, dprev);
    }
}

template <typename T>
ModelT<double> to_double(const ModelT<T>& m) {
    ModelT<double> out;
    out.arch = m.arch;
    out.input_side = m.input_side;
    out.num_classes = m.num_classes;
    out.seed = m.seed;
    out.backend = m.backend;
    out.layers = m.layers;
    out.shapes = m.shapes;
    out.class_names = m.class_names;
    out.params.resize(m.params.size());
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        if (!m.layers[i].has_params()) continue;
        std::vector<double> w(m.params[i].weights.size());
        for (std::size_t k = 0; k < w.size(); ++k) w[k] = m.params[i].weights[k];
        std::vector<double> b(m.params[i].bias.size());
        for (std::size_t k = 0; k < b.size(); ++k) b[k] = m.params[i].bias[k];
        out.params[i].weights = TensorT<double>(m.params[i].weights.shape(), std::move(w));
        out.params[i].bias = TensorT<double>(m.params[i].bias.shape(), std::move(b));
    }
    return out;
}

// Model files carry a magic tag, a JSON description, the raw float32
// parameters, and a trailing CRC; see save_model in model_io.cpp for the
// exact layout.
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace malgrid

#endif
