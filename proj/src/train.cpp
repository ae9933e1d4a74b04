#include "malgrid/train.hpp"

#include <algorithm>

#include "malgrid/rng.hpp"

namespace malgrid {

namespace {

void zero_grads(Gradients& g) {
    for (auto& layer : g.g) {
        std::fill(layer.weights.data(), layer.weights.data() + layer.weights.size(), 0.0f);
        std::fill(layer.bias.data(), layer.bias.data() + layer.bias.size(), 0.0f);
    }
}

void accumulate_grads(Gradients& into, const Gradients& from) {
    for (std::size_t i = 0; i < into.g.size(); ++i) {
        for (std::size_t k = 0; k < into.g[i].weights.size(); ++k)
            into.g[i].weights[k] += from.g[i].weights[k];
        for (std::size_t k = 0; k < into.g[i].bias.size(); ++k)
            into.g[i].bias[k] += from.g[i].bias[k];
    }
}

void scale_grads(Gradients& g, float factor) {
    for (auto& layer : g.g) {
        for (std::size_t k = 0; k < layer.weights.size(); ++k) layer.weights[k] *= factor;
        for (std::size_t k = 0; k < layer.bias.size(); ++k) layer.bias[k] *= factor;
    }
}

}  // namespace

EvalResult evaluate_split(const Model& m, const LabeledDataset& ds,
                          const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("cannot evaluate an empty index set");
    ForwardTrace trace;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (int idx : indices) {
        const auto i = static_cast<std::size_t>(idx);
        const Tensor& probs = model_forward(m, ds.images[i], trace);
        loss_sum += cross_entropy(probs, one_hot(ds.labels[i], m.num_classes));
        if (argmax_index(probs) == ds.labels[i]) ++correct;
    }
    const double n = static_cast<double>(indices.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

EpochStats train_epoch(Model& m, const LabeledDataset& ds,
                       const std::vector<int>& train_indices, const TrainConfig& cfg,
                       int epoch_index, Gradients& velocity) {
    if (train_indices.empty()) throw std::invalid_argument("no training samples");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be positive");

    std::vector<int> order = train_indices;
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch_index)));
    shuffle(order, rng);

    Gradients batch_sum = Gradients::zeros_like(m);
    Gradients sample_grads = Gradients::zeros_like(m);
    ForwardTrace trace;
    double loss_sum = 0.0;
    std::size_t correct = 0;

    const std::size_t n = order.size();
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t b0 = 0; b0 < n; b0 += bs) {
        const std::size_t b1 = std::min(n, b0 + bs);
        zero_grads(batch_sum);
        for (std::size_t s = b0; s < b1; ++s) {
            const auto i = static_cast<std::size_t>(order[s]);
            const Tensor& probs = model_forward(m, ds.images[i], trace);
            const Tensor target = one_hot(ds.labels[i], m.num_classes);
            loss_sum += cross_entropy(probs, target);
            if (argmax_index(probs) == ds.labels[i]) ++correct;
            model_backward(m, trace, target, sample_grads);
            accumulate_grads(batch_sum, sample_grads);
        }
        scale_grads(batch_sum, 1.0f / static_cast<float>(b1 - b0));
        sgd_momentum_step(m, batch_sum, velocity, cfg.lr, cfg.momentum);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    return stats;
}

FitHistory fit(Model& m, const LabeledDataset& ds, const std::vector<int>& train_indices,
               const std::vector<int>& val_indices, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("epoch count must be positive");
    Gradients velocity = Gradients::zeros_like(m);
    FitHistory history;
    history.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int e = 0; e < cfg.epochs; ++e) {
        EpochStats stats = train_epoch(m, ds, train_indices, cfg, e, velocity);
        if (!val_indices.empty()) {
            const EvalResult val = evaluate_split(m, ds, val_indices);
            stats.val_loss = val.loss;
            stats.val_acc = val.accuracy;
        }
        history.epochs.push_back(stats);
    }
    return history;
}

}  // namespace malgrid
