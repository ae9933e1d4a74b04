#include "malgrid/model.hpp"

#include <sstream>

namespace malgrid {

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv3x3: return "conv3x3";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2: return "maxpool2";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

std::string arch_name(Arch arch) {
    return arch == Arch::Baseline ? "baseline" : "improved";
}

Arch arch_from_name(const std::string& name) {
    if (name == "baseline") return Arch::Baseline;
    if (name == "improved") return Arch::Improved;
    throw std::invalid_argument("unknown architecture \"" + name +
                                "\" (expected baseline or improved)");
}

std::vector<LayerSpec> layers_for(Arch arch, int num_classes) {
    using K = LayerKind;
    std::vector<LayerSpec> l;
    l.push_back({K::Conv3x3, 32});
    l.push_back({K::Relu});
    l.push_back({K::MaxPool2});
    if (arch == Arch::Improved) {
        l.push_back({K::Conv3x3, 64});
        l.push_back({K::Relu});
        l.push_back({K::Conv3x3, 64});
        l.push_back({K::Relu});
        l.push_back({K::MaxPool2});
    }
    l.push_back({K::Flatten});
    l.push_back({K::Dense, 100});
    l.push_back({K::Relu});
    l.push_back({K::Dense, num_classes});
    l.push_back({K::Softmax});
    return l;
}

std::vector<std::vector<int>> infer_shapes(const std::vector<LayerSpec>& layers,
                                           const std::vector<int>& input_shape) {
    auto fail = [](std::size_t index, const LayerSpec& spec, const std::vector<int>& in,
                   const std::string& why) {
        std::ostringstream os;
        os << "layer " << index << " (" << layer_kind_name(spec.kind) << "): " << why
           << ", input shape " << Tensor::shape_string(in);
        throw std::invalid_argument(os.str());
    };

    std::vector<std::vector<int>> shapes;
    shapes.reserve(layers.size() + 1);
    shapes.push_back(input_shape);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& spec = layers[i];
        const std::vector<int>& in = shapes.back();
        switch (spec.kind) {
            case LayerKind::Conv3x3:
                if (in.size() != 3) fail(i, spec, in, "needs a rank-3 input");
                if (in[0] < 3 || in[1] < 3)
                    fail(i, spec, in, "needs at least 3x3 of spatial extent");
                if (spec.width < 1) fail(i, spec, in, "needs a positive channel count");
                shapes.push_back({in[0] - 2, in[1] - 2, spec.width});
                break;
            case LayerKind::MaxPool2:
                if (in.size() != 3) fail(i, spec, in, "needs a rank-3 input");
                if (in[0] < 2 || in[1] < 2)
                    fail(i, spec, in, "needs at least 2x2 of spatial extent");
                shapes.push_back({in[0] / 2, in[1] / 2, in[2]});
                break;
            case LayerKind::Relu:
            case LayerKind::Softmax:
                shapes.push_back(in);
                break;
            case LayerKind::Flatten: {
                int n = 1;
                for (int d : in) n *= d;
                shapes.push_back({n});
                break;
            }
            case LayerKind::Dense:
                if (in.size() != 1) fail(i, spec, in, "needs a rank-1 input");
                if (spec.width < 1) fail(i, spec, in, "needs a positive unit count");
                shapes.push_back({spec.width});
                break;
        }
    }
    return shapes;
}

}  // namespace malgrid
