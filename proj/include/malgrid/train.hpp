#ifndef MALGRID_TRAIN_HPP
#define MALGRID_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "malgrid/data.hpp"
#include "malgrid/model.hpp"

namespace malgrid {

struct TrainConfig {
    double lr = 0.01;
    double momentum = 0.9;
    int epochs = 10;
    int batch_size = 32;
    std::uint64_t seed = 1;
};

// Per-epoch metrics. Validation fields are NaN when no validation split
// was supplied. Train metrics are running values: each sample is scored
// by the parameters in force when its batch was visited.
struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    double val_acc = std::numeric_limits<double>::quiet_NaN();
};

struct FitHistory {
    std::vector<EpochStats> epochs;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Cross-entropy of a predicted distribution against a one-hot target,
// accumulated in double regardless of the model scalar type. Predictions
// are floored at 1e-12 so a confidently wrong model yields a large but
// finite loss.
template <typename T>
double cross_entropy(const TensorT<T>& probs, const TensorT<T>& target) {
    if (!probs.same_shape(target))
        throw std::invalid_argument("cross_entropy shape mismatch: " +
                                    TensorT<T>::shape_string(probs.shape()) + " vs " +
                                    TensorT<T>::shape_string(target.shape()));
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double t = static_cast<double>(target[i]);
        if (t != 0.0)
            loss -= t * std::log(std::max(static_cast<double>(probs[i]), 1e-12));
    }
    return loss;
}

// Classical momentum: v <- momentum * v - lr * g, theta <- theta + v,
// elementwise in the model's scalar type.
template <typename T>
void sgd_momentum_step(ModelT<T>& m, const GradientsT<T>& grads, GradientsT<T>& velocity,
                       double lr, double momentum) {
    const T l = static_cast<T>(lr);
    const T mu = static_cast<T>(momentum);
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        if (!m.layers[i].has_params()) continue;
        for (int part = 0; part < 2; ++part) {
            TensorT<T>& theta = part == 0 ? m.params[i].weights : m.params[i].bias;
            const TensorT<T>& g = part == 0 ? grads.g[i].weights : grads.g[i].bias;
            TensorT<T>& v = part == 0 ? velocity.g[i].weights : velocity.g[i].bias;
            for (std::size_t k = 0; k < theta.size(); ++k) {
                v[k] = mu * v[k] - l * g[k];
                theta[k] += v[k];
            }
        }
    }
}

// Index of the largest entry of a rank-1 tensor; ties keep the lowest
// index.
template <typename T>
int argmax_index(const TensorT<T>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    return best;
}

EvalResult evaluate_split(const Model& m, const LabeledDataset& ds,
                          const std::vector<int>& indices);

// One pass over the training indices: reshuffles them with a seed derived
// from (config seed, epoch index), walks ceil(n / batch_size) batches, and
// for each applies one momentum step using the mean of the per-sample
// gradients. Returns running train loss and accuracy.
EpochStats train_epoch(Model& m, const LabeledDataset& ds,
                       const std::vector<int>& train_indices, const TrainConfig& cfg,
                       int epoch_index, Gradients& velocity);

// Full training run; validation metrics are filled per epoch when
// val_indices is non-empty.
FitHistory fit(Model& m, const LabeledDataset& ds, const std::vector<int>& train_indices,
               const std::vector<int>& val_indices, const TrainConfig& cfg);

}  // namespace malgrid

#endif
