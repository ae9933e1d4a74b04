#include "malgrid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "malgrid/errors.hpp"
#include "malgrid/rng.hpp"

namespace malgrid {

namespace {

// Chunk m shuffled values into k pieces, sizes differing by at most one,
// larger pieces first.
std::vector<std::vector<int>> chunk(const std::vector<int>& order, int k) {
    const int n = static_cast<int>(order.size());
    const int base = n / k;
    const int extra = n % k;
    std::vector<std::vector<int>> chunks(static_cast<std::size_t>(k));
    std::size_t pos = 0;
    for (int c = 0; c < k; ++c) {
        const int len = base + (c < extra ? 1 : 0);
        chunks[static_cast<std::size_t>(c)].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                                   order.begin() + static_cast<std::ptrdiff_t>(pos) + len);
        pos += static_cast<std::size_t>(len);
    }
    return chunks;
}

}  // namespace

std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("need at least 2 folds");
    if (n < k) throw std::invalid_argument("cannot split " + std::to_string(n) +
                                           " samples into " + std::to_string(k) + " folds");
    return chunk(shuffled_indices(n, seed), k);
}

std::vector<std::vector<int>> kfold_split_stratified(const std::vector<int>& labels, int k,
                                                     std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("need at least 2 folds");
    const int n = static_cast<int>(labels.size());
    if (n < k) throw std::invalid_argument("cannot split " + std::to_string(n) +
                                           " samples into " + std::to_string(k) + " folds");
    const std::vector<int> order = shuffled_indices(n, seed);
    int num_classes = 0;
    for (int l : labels) num_classes = std::max(num_classes, l + 1);

    std::vector<std::vector<int>> per_class(static_cast<std::size_t>(num_classes));
    for (int idx : order) per_class[static_cast<std::size_t>(labels[static_cast<std::size_t>(idx)])].push_back(idx);
    for (const auto& cls : per_class)
        if (!cls.empty() && static_cast<int>(cls.size()) < k)
            throw std::invalid_argument(
                "a class has fewer samples than folds; stratified k-fold needs at least " +
                std::to_string(k) + " per class");

    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    for (const auto& cls : per_class) {
        if (cls.empty()) continue;
        const std::vector<std::vector<int>> pieces = chunk(cls, k);
        for (int c = 0; c < k; ++c)
            folds[static_cast<std::size_t>(c)].insert(folds[static_cast<std::size_t>(c)].end(),
                                                      pieces[static_cast<std::size_t>(c)].begin(),
                                                      pieces[static_cast<std::size_t>(c)].end());
    }
    return folds;
}

std::vector<FoldIndices> folds_from_chunks(const std::vector<std::vector<int>>& chunks) {
    std::vector<FoldIndices> folds(chunks.size());
    for (std::size_t f = 0; f < chunks.size(); ++f) {
        folds[f].val = chunks[f];
        for (std::size_t other = 0; other < chunks.size(); ++other) {
            if (other == f) continue;
            folds[f].train.insert(folds[f].train.end(), chunks[other].begin(),
                                  chunks[other].end());
        }
    }
    return folds;
}

CvSummary summarize_performance(const std::vector<double>& accuracies) {
    if (accuracies.empty()) throw std::invalid_argument("no accuracies to summarize");
    CvSummary s;
    s.fold_accuracies = accuracies;
    const double n = static_cast<double>(accuracies.size());
    double sum = 0.0;
    for (double a : accuracies) sum += a;
    s.mean = sum / n;
    double sq = 0.0;
    for (double a : accuracies) sq += (a - s.mean) * (a - s.mean);
    s.stddev = std::sqrt(sq / n);

    std::vector<double> sorted = accuracies;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&sorted](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= sorted.size()) return sorted.back();
        return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    };
    s.min = sorted.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = sorted.back();
    return s;
}

CvResult evaluate_model_cv(const LabeledDataset& ds, const CvConfig& cfg) {
    if (ds.size() == 0) throw DataError("cannot cross-validate an empty dataset");
    const std::vector<std::vector<int>> chunks =
        cfg.stratified
            ? kfold_split_stratified(ds.labels, cfg.folds, cfg.train.seed)
            : kfold_split(static_cast<int>(ds.size()), cfg.folds, cfg.train.seed);
    const std::vector<FoldIndices> folds = folds_from_chunks(chunks);

    CvResult result;
    result.folds.resize(folds.size());
    std::vector<double> accuracies;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        Model m = build_model<float>(cfg.arch, cfg.input_side, ds.num_classes(),
                                     derive_seed(cfg.train.seed, static_cast<std::uint64_t>(f)));
        m.class_names = ds.class_names;
        FoldResult& fr = result.folds[f];
        fr.indices = folds[f];
        fr.history = fit(m, ds, folds[f].train, folds[f].val, cfg.train);
        fr.accuracy = fr.history.epochs.back().val_acc;
        accuracies.push_back(fr.accuracy);
    }
    result.summary = summarize_performance(accuracies);
    return result;
}

std::vector<int> predict_labels(const Model& m, const LabeledDataset& ds,
                                const std::vector<int>& indices) {
    ForwardTrace trace;
    std::vector<int> out;
    out.reserve(indices.size());
    for (int idx : indices)
        out.push_back(argmax_index(model_forward(m, ds.images[static_cast<std::size_t>(idx)], trace)));
    return out;
}

std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& truth,
                                               const std::vector<int>& predicted,
                                               int num_classes) {
    if (truth.size() != predicted.size())
        throw std::invalid_argument("confusion matrix needs matching label counts");
    std::vector<std::vector<int>> mat(static_cast<std::size_t>(num_classes),
                                      std::vector<int>(static_cast<std::size_t>(num_classes), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 ||
            predicted[i] >= num_classes)
            throw std::invalid_argument("label out of range in confusion matrix");
        ++mat[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return mat;
}

}  // namespace malgrid
