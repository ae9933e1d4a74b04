#ifndef MALGRID_EVAL_HPP
#define MALGRID_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "malgrid/data.hpp"
#include "malgrid/model.hpp"
#include "malgrid/train.hpp"

namespace malgrid {

// Shuffles 0..n-1 once with `seed` and cuts the result into k contiguous
// chunks. Sizes differ by at most one, larger chunks first, so chunks
// always partition the index range exactly.
std::vector<std::vector<int>> kfold_split(int n, int k, std::uint64_t seed);

// Per-class variant: each class's shuffled indices are chunked as above
// and chunk j of every class lands in fold j, keeping class proportions
// roughly constant across folds.
std::vector<std::vector<int>> kfold_split_stratified(const std::vector<int>& labels, int k,
                                                     std::uint64_t seed);

struct FoldIndices {
    std::vector<int> train;
    std::vector<int> val;
};

// Train/validation index pairs where fold i validates on chunk i and
// trains on the remaining chunks, preserving chunk order.
std::vector<FoldIndices> folds_from_chunks(const std::vector<std::vector<int>>& chunks);

struct FoldResult {
    FoldIndices indices;
    FitHistory history;
    double accuracy = 0.0;  // validation accuracy after the final epoch
};

// Spread statistics over per-fold accuracies: mean, population standard
// deviation, and a five-number summary with linearly interpolated
// quartiles.
struct CvSummary {
    std::vector<double> fold_accuracies;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

CvSummary summarize_performance(const std::vector<double>& accuracies);

struct CvConfig {
    Arch arch = Arch::Baseline;
    int input_side = kDefaultInputSide;
    int folds = 5;
    bool stratified = false;
    TrainConfig train;
};

struct CvResult {
    std::vector<FoldResult> folds;
    CvSummary summary;
};

// k-fold cross-validation: every fold trains a fresh model (seeded from
// the config seed and the fold index) and scores it on the held-out
// chunk.
CvResult evaluate_model_cv(const LabeledDataset& ds, const CvConfig& cfg);

std::vector<int> predict_labels(const Model& m, const LabeledDataset& ds,
                                const std::vector<int>& indices);

// confusion[t][p] counts samples of true class t predicted as p.
std::vector<std::vector<int>> confusion_matrix(const std::vector<int>& truth,
                                               const std::vector<int>& predicted,
                                               int num_classes);

// Writes history.csv, summary.json, curves.svg and boxplot.svg into
// out_dir (created if needed). Output is byte-stable for identical
// inputs.
void emit_reports(const std::filesystem::path& out_dir, const CvResult& cv,
                  const CvConfig& cfg, const std::vector<std::string>& class_names);

}  // namespace malgrid

#endif
