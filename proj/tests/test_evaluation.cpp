#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "malgrid/eval.hpp"
#include "malgrid/rng.hpp"

using namespace malgrid;

namespace {

std::vector<int> sorted_union(const std::vector<std::vector<int>>& chunks) {
    std::vector<int> all;
    for (const auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
    std::sort(all.begin(), all.end());
    return all;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    REQUIRE(r.ec == std::errc());
    return v;
}

}  // namespace

TEST_CASE("k-fold chunks partition the range with larger chunks first") {
    const auto chunks = kfold_split(11, 5, 1);
    REQUIRE(chunks.size() == 5);
    CHECK(chunks[0].size() == 3);
    for (int f = 1; f < 5; ++f) CHECK(chunks[static_cast<std::size_t>(f)].size() == 2);

    const std::vector<int> all = sorted_union(chunks);
    REQUIRE(all.size() == 11);
    for (int i = 0; i < 11; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("k-fold sizes for several corpus sizes") {
    for (int n : {10, 11, 100, 9339}) {
        const auto chunks = kfold_split(n, 5, 9);
        std::size_t total = 0;
        std::size_t largest = 0, smallest = static_cast<std::size_t>(n);
        for (const auto& c : chunks) {
            total += c.size();
            largest = std::max(largest, c.size());
            smallest = std::min(smallest, c.size());
        }
        CHECK(total == static_cast<std::size_t>(n));
        CHECK(largest - smallest <= 1);
        const std::vector<int> all = sorted_union(chunks);
        CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    }
}

TEST_CASE("k-fold assignment is deterministic per seed") {
    const auto a = kfold_split(100, 5, 42);
    const auto b = kfold_split(100, 5, 42);
    const auto c = kfold_split(100, 5, 43);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("k-fold argument validation") {
    CHECK_THROWS_AS(kfold_split(4, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(kfold_split(10, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(kfold_split(10, 0, 1), std::invalid_argument);
}

TEST_CASE("folds_from_chunks validates on its own chunk and trains on the rest") {
    const auto chunks = kfold_split(23, 4, 7);
    const auto folds = folds_from_chunks(chunks);
    REQUIRE(folds.size() == 4);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        CHECK(folds[f].val == chunks[f]);
        CHECK(folds[f].train.size() + folds[f].val.size() == 23);
        std::set<int> train(folds[f].train.begin(), folds[f].train.end());
        for (int i : folds[f].val) CHECK(train.count(i) == 0);
    }
}

TEST_CASE("stratified folds balance every class") {
    // 3 classes with 10, 15, 20 samples; every fold of 5 must hold
    // exactly 2, 3, 4 of them.
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) labels.push_back(0);
    for (int i = 0; i < 15; ++i) labels.push_back(1);
    for (int i = 0; i < 20; ++i) labels.push_back(2);

    const auto chunks = kfold_split_stratified(labels, 5, 3);
    REQUIRE(chunks.size() == 5);
    for (const auto& c : chunks) {
        int per_class[3] = {0, 0, 0};
        for (int i : c) per_class[labels[static_cast<std::size_t>(i)]]++;
        CHECK(per_class[0] == 2);
        CHECK(per_class[1] == 3);
        CHECK(per_class[2] == 4);
    }
    const std::vector<int> all = sorted_union(chunks);
    CHECK(all.size() == labels.size());

    // A class smaller than k cannot be spread across every fold.
    std::vector<int> thin = {0, 0, 0, 0, 0, 1, 1};
    CHECK_THROWS_AS(kfold_split_stratified(thin, 5, 1), std::invalid_argument);
}

TEST_CASE("summary statistics hand oracle") {
    // mean 5, population variance 4.
    const CvSummary s = summarize_performance({2, 4, 4, 4, 5, 5, 7, 9});
    CHECK(s.mean == doctest::Approx(5.0));
    CHECK(s.stddev == doctest::Approx(2.0));
    CHECK(s.min == doctest::Approx(2.0));
    CHECK(s.max == doctest::Approx(9.0));
    CHECK(s.median == doctest::Approx(4.5));
}

TEST_CASE("quartiles interpolate linearly") {
    const CvSummary s = summarize_performance({1, 2, 3, 4});
    CHECK(s.q1 == doctest::Approx(1.75));
    CHECK(s.median == doctest::Approx(2.5));
    CHECK(s.q3 == doctest::Approx(3.25));

    const CvSummary one = summarize_performance({0.5});
    CHECK(one.mean == doctest::Approx(0.5));
    CHECK(one.stddev == doctest::Approx(0.0));
    CHECK(one.min == doctest::Approx(0.5));
    CHECK(one.q3 == doctest::Approx(0.5));

    CHECK_THROWS_AS(summarize_performance({}), std::invalid_argument);
}

TEST_CASE("recorded five-fold accuracy summaries reproduce") {
    // Reference percentage lists for the two stock architectures.
    const CvSummary base =
        summarize_performance({98.467, 98.683, 98.642, 98.850, 98.583});
    CHECK(base.mean == doctest::Approx(98.645).epsilon(1e-5));

    const CvSummary improved =
        summarize_performance({98.775, 98.683, 98.967, 99.183, 99.008});
    CHECK(improved.mean == doctest::Approx(98.9232).epsilon(1e-5));
}

TEST_CASE("cross-validation over a small synthetic corpus") {
    SynthSpec spec;
    spec.families = 3;
    spec.per_family = 10;
    spec.seed = 5;
    const LabeledDataset ds = synth_dataset(spec);

    CvConfig cfg;
    cfg.arch = Arch::Baseline;
    cfg.folds = 3;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    const CvResult cv = evaluate_model_cv(ds, cfg);

    REQUIRE(cv.folds.size() == 3);
    REQUIRE(cv.summary.fold_accuracies.size() == 3);
    for (const auto& fold : cv.folds) {
        CHECK(fold.history.epochs.size() == 2);
        CHECK(fold.accuracy >= 0.0);
        CHECK(fold.accuracy <= 1.0);
        CHECK(fold.accuracy == fold.history.epochs.back().val_acc);
        CHECK(fold.indices.train.size() + fold.indices.val.size() == ds.size());
    }
    // The summary is computed from exactly these accuracies.
    double mean = 0.0;
    for (const auto& fold : cv.folds) mean += fold.accuracy;
    mean /= 3.0;
    CHECK(cv.summary.mean == doctest::Approx(mean).epsilon(1e-12));

    // Same config, same corpus: bitwise identical outcome.
    const CvResult again = evaluate_model_cv(ds, cfg);
    for (std::size_t f = 0; f < cv.folds.size(); ++f)
        CHECK(cv.folds[f].accuracy == again.folds[f].accuracy);
}

TEST_CASE("confusion matrix counts land at [truth][predicted]") {
    const auto cm = confusion_matrix({0, 0, 1, 2, 2, 2}, {0, 1, 1, 2, 0, 2}, 3);
    REQUIRE(cm.size() == 3);
    CHECK(cm[0][0] == 1);
    CHECK(cm[0][1] == 1);
    CHECK(cm[1][1] == 1);
    CHECK(cm[2][2] == 2);
    CHECK(cm[2][0] == 1);
    CHECK(cm[1][0] == 0);
    CHECK_THROWS_AS(confusion_matrix({0, 3}, {0, 0}, 3), std::invalid_argument);
    CHECK_THROWS_AS(confusion_matrix({0}, {0, 1}, 2), std::invalid_argument);
}

TEST_CASE("reports are written, parseable, and byte-stable") {
    SynthSpec spec;
    spec.families = 2;
    spec.per_family = 8;
    spec.seed = 6;
    const LabeledDataset ds = synth_dataset(spec);

    CvConfig cfg;
    cfg.folds = 2;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    const CvResult cv = evaluate_model_cv(ds, cfg);

    const auto dir_a = std::filesystem::temp_directory_path() / "malgrid_reports_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "malgrid_reports_b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    emit_reports(dir_a, cv, cfg, ds.class_names);
    emit_reports(dir_b, cv, cfg, ds.class_names);

    for (const char* name : {"history.csv", "summary.json", "curves.svg", "boxplot.svg"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(dir_a / name));
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    }

    // history.csv: header plus folds * epochs rows, and the final-epoch
    // val_acc column round-trips to the exact double used in the summary.
    std::istringstream csv(slurp(dir_a / "history.csv"));
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "fold,epoch,train_loss,train_acc,val_loss,val_acc");
    int rows = 0;
    std::vector<double> final_val_acc(cv.folds.size(), -1.0);
    while (std::getline(csv, line)) {
        REQUIRE(!line.empty());
        std::vector<std::string> cols;
        std::istringstream ls(line);
        std::string col;
        while (std::getline(ls, col, ',')) cols.push_back(col);
        REQUIRE(cols.size() == 6);
        const int fold = static_cast<int>(parse_double(cols[0]));
        const int epoch = static_cast<int>(parse_double(cols[1]));
        if (epoch == cfg.train.epochs - 1)
            final_val_acc[static_cast<std::size_t>(fold)] = parse_double(cols[5]);
        ++rows;
    }
    CHECK(rows == static_cast<int>(cv.folds.size()) * cfg.train.epochs);
    for (std::size_t f = 0; f < cv.folds.size(); ++f)
        CHECK(final_val_acc[f] == cv.folds[f].accuracy);

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("fold model seeds differ between folds") {
    // Folds must not share initial weights; the per-fold seed is derived
    // from the training seed and the fold index.
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
}
