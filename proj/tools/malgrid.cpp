#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "malgrid/data.hpp"
#include "malgrid/errors.hpp"
#include "malgrid/eval.hpp"
#include "malgrid/image.hpp"
#include "malgrid/model.hpp"
#include "malgrid/train.hpp"

// Command line front end. Exit codes: 0 success, 1 usage, 2 bad data,
// 3 I/O failure. Runtime errors print a single machine-parseable line on
// stderr.

namespace fs = std::filesystem;
using namespace malgrid;

namespace {

// Removes declared output paths unless the command commits them, so a
// failed run does not leave half-written artifacts behind.
class OutputGuard {
  public:
    void add(fs::path p) { files_.push_back(std::move(p)); }
    void add_tree(fs::path p) { trees_.push_back(std::move(p)); }
    void commit() { committed_ = true; }

    ~OutputGuard() {
        if (committed_) return;
        std::error_code ec;
        for (const fs::path& p : files_) fs::remove(p, ec);
        for (const fs::path& p : trees_) fs::remove_all(p, ec);
    }

  private:
    std::vector<fs::path> files_;
    std::vector<fs::path> trees_;
    bool committed_ = false;
};

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return bytes;
}

GrayImage image_from_file(const fs::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (looks_like_pgm(bytes)) return parse_pgm(bytes, path.string());
    if (bytes.empty()) throw DataError(path.string() + ": empty binary");
    return bytes_to_image(bytes);
}

std::string class_label(const Model& m, int i) {
    if (!m.class_names.empty()) return m.class_names[static_cast<std::size_t>(i)];
    return "class_" + std::to_string(i);
}

void check_corpus_matches_model(const Model& m, const LabeledDataset& ds) {
    if (ds.num_classes() != m.num_classes)
        throw DataError("corpus has " + std::to_string(ds.num_classes()) +
                        " classes but the model expects " + std::to_string(m.num_classes));
    if (m.class_names.empty()) return;
    for (int i = 0; i < m.num_classes; ++i) {
        if (ds.class_names[static_cast<std::size_t>(i)] != m.class_names[static_cast<std::size_t>(i)])
            throw DataError("class " + std::to_string(i) + " is \"" +
                            ds.class_names[static_cast<std::size_t>(i)] +
                            "\" in the corpus but \"" +
                            m.class_names[static_cast<std::size_t>(i)] + "\" in the model");
    }
}

struct CommonTrainOpts {
    double lr = 0.01;
    double momentum = 0.9;
    int epochs = 10;
    int batch_size = 32;
    std::uint64_t seed = 1;
    int input_side = kDefaultInputSide;
    std::string arch = "baseline";

    void attach(CLI::App* cmd) {
        cmd->add_option("--lr", lr, "Learning rate");
        cmd->add_option("--momentum", momentum, "Momentum coefficient");
        cmd->add_option("--epochs", epochs, "Training epochs");
        cmd->add_option("--batch-size", batch_size, "Mini-batch size");
        cmd->add_option("--seed", seed, "Seed for shuffling and initialization");
        cmd->add_option("--input-side", input_side, "Square input size fed to the network");
        cmd->add_option("--arch", arch, "Network architecture")
            ->check(CLI::IsMember({"baseline", "improved"}));
    }

    TrainConfig train_config() const {
        TrainConfig cfg;
        cfg.lr = lr;
        cfg.momentum = momentum;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        return cfg;
    }
};

int run_convert(const std::string& input, const std::string& output, int side) {
    GrayImage img = image_from_file(input);
    if (side > 0) img = resize_to_input(img, side);
    OutputGuard guard;
    guard.add(output);
    write_pgm(img, output);
    guard.commit();
    std::printf("%s: %dx%d -> %s\n", input.c_str(), img.width, img.height, output.c_str());
    return 0;
}

int run_synth(const std::string& out_dir, const SynthSpec& spec) {
    OutputGuard guard;
    if (!fs::exists(out_dir)) guard.add_tree(out_dir);
    write_synthetic_corpus(spec, out_dir);
    guard.commit();
    std::printf("wrote %d families x %d samples to %s\n", spec.families, spec.per_family,
                out_dir.c_str());
    return 0;
}

int run_kfold(const std::string& corpus, const CommonTrainOpts& opts, int folds,
              bool stratified, const std::string& out_dir) {
    const LabeledDataset ds = load_corpus(corpus, opts.input_side);
    CvConfig cfg;
    cfg.arch = arch_from_name(opts.arch);
    cfg.input_side = opts.input_side;
    cfg.folds = folds;
    cfg.stratified = stratified;
    cfg.train = opts.train_config();

    const CvResult cv = evaluate_model_cv(ds, cfg);
    for (const FoldResult& f : cv.folds) std::printf("> %.3f\n", f.accuracy * 100.0);
    std::printf("Accuracy: mean=%.3f std=%.3f, n=%d\n", cv.summary.mean * 100.0,
                cv.summary.stddev * 100.0, static_cast<int>(cv.folds.size()));

    if (!out_dir.empty()) {
        OutputGuard guard;
        if (!fs::exists(out_dir)) guard.add_tree(out_dir);
        for (const char* name : {"history.csv", "summary.json", "curves.svg", "boxplot.svg"})
            guard.add(fs::path(out_dir) / name);
        emit_reports(out_dir, cv, cfg, ds.class_names);
        guard.commit();
        std::printf("reports written to %s\n", out_dir.c_str());
    }
    return 0;
}

int run_train_final(const std::string& corpus, const CommonTrainOpts& opts,
                    double train_frac, bool stratified, const std::string& model_path) {
    const LabeledDataset ds = load_corpus(corpus, opts.input_side);
    const SplitIndices split = split_train_test(ds, train_frac, opts.seed, stratified);

    Model m = build_model<float>(arch_from_name(opts.arch), opts.input_side,
                                 ds.num_classes(), opts.seed);
    m.class_names = ds.class_names;
    const FitHistory history = fit(m, ds, split.train, {}, opts.train_config());
    for (std::size_t e = 0; e < history.epochs.size(); ++e)
        std::printf("epoch %zu: train_loss=%.6f train_acc=%.4f\n", e,
                    history.epochs[e].train_loss, history.epochs[e].train_acc);

    const EvalResult test = evaluate_split(m, ds, split.test);
    std::printf("test accuracy: %.3f (%zu train / %zu test samples)\n",
                test.accuracy * 100.0, split.train.size(), split.test.size());

    OutputGuard guard;
    guard.add(model_path);
    save_model(m, model_path);
    guard.commit();
    std::printf("model written to %s\n", model_path.c_str());
    return 0;
}

int run_evaluate(const std::string& corpus, const std::string& model_path) {
    const Model m = load_model(model_path);
    const LabeledDataset ds = load_corpus(corpus, m.input_side);
    check_corpus_matches_model(m, ds);

    std::vector<int> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const EvalResult res = evaluate_split(m, ds, all);
    const std::vector<int> pred = predict_labels(m, ds, all);
    const auto confusion = confusion_matrix(ds.labels, pred, m.num_classes);

    std::printf("accuracy: %.3f over %zu samples\n", res.accuracy * 100.0, ds.size());
    std::printf("mean loss: %.6f\n", res.loss);
    std::printf("confusion matrix (rows true, columns predicted):\n");
    for (int t = 0; t < m.num_classes; ++t) {
        std::printf("%16s", class_label(m, t).c_str());
        for (int p = 0; p < m.num_classes; ++p)
            std::printf(" %5d", confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
        std::printf("\n");
    }
    return 0;
}

int run_predict(const std::string& input, const std::string& model_path) {
    const Model m = load_model(model_path);
    const GrayImage img = image_from_file(input);
    const Tensor x = normalize(resize_to_input(img, m.input_side), m.input_side);
    const Tensor probs = model_forward(m, x);
    const int best = argmax_index(probs);
    std::printf("prediction: %s (p=%.4f)\n", class_label(m, best).c_str(),
                static_cast<double>(probs[static_cast<std::size_t>(best)]));
    for (int i = 0; i < m.num_classes; ++i)
        std::printf("  %s: %.6f\n", class_label(m, i).c_str(),
                    static_cast<double>(probs[static_cast<std::size_t>(i)]));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grayscale malware imaging and CNN classification toolkit"};
    app.require_subcommand(1);

    // convert
    std::string conv_input, conv_output;
    int conv_side = 0;
    CLI::App* convert = app.add_subcommand("convert", "Render a binary as a PGM image");
    convert->add_option("input", conv_input, "Binary or PGM file")->required();
    convert->add_option("output", conv_output, "Output PGM path")->required();
    convert->add_option("--input-side", conv_side,
                        "Resize to this square side (0 keeps the native grid)");

    // synth
    std::string synth_dir;
    SynthSpec synth_spec;
    CLI::App* synth = app.add_subcommand("synth", "Write a synthetic textured corpus");
    synth->add_option("out_dir", synth_dir, "Corpus directory to create")->required();
    synth->add_option("--families", synth_spec.families, "Number of families");
    synth->add_option("--per-family", synth_spec.per_family, "Samples per family");
    synth->add_option("--seed", synth_spec.seed, "Corpus seed");
    synth->add_option("--min-bytes", synth_spec.min_bytes, "Smallest payload size");
    synth->add_option("--max-bytes", synth_spec.max_bytes, "Largest payload size");

    // kfold
    std::string kfold_corpus, kfold_out_dir;
    CommonTrainOpts kfold_opts;
    int kfold_folds = 5;
    bool kfold_stratified = false;
    CLI::App* kfold = app.add_subcommand("kfold", "Cross-validate a model on a corpus");
    kfold->add_option("corpus", kfold_corpus, "Corpus directory")->required();
    kfold_opts.attach(kfold);
    kfold->add_option("--folds", kfold_folds, "Number of folds");
    kfold->add_flag("--stratify", kfold_stratified, "Keep class proportions per fold");
    kfold->add_option("--out-dir", kfold_out_dir, "Directory for CSV/JSON/SVG reports");

    // train-final
    std::string tf_corpus, tf_model;
    CommonTrainOpts tf_opts;
    double tf_frac = 0.7;
    bool tf_stratified = true;
    CLI::App* train_final =
        app.add_subcommand("train-final", "Train on a split and save the model");
    train_final->add_option("corpus", tf_corpus, "Corpus directory")->required();
    train_final->add_option("--model", tf_model, "Output model path")->required();
    tf_opts.attach(train_final);
    train_final->add_option("--train-frac", tf_frac, "Fraction of samples used to train");
    train_final->add_flag("--stratify,!--no-stratify", tf_stratified,
                          "Split each class proportionally (default on)");

    // evaluate
    std::string eval_corpus, eval_model;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score a saved model on a corpus");
    evaluate->add_option("corpus", eval_corpus, "Corpus directory")->required();
    evaluate->add_option("--model", eval_model, "Model path")->required();

    // predict
    std::string pred_input, pred_model;
    CLI::App* predict = app.add_subcommand("predict", "Classify one binary or image");
    predict->add_option("input", pred_input, "Binary or PGM file")->required();
    predict->add_option("--model", pred_model, "Model path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(convert)) return run_convert(conv_input, conv_output, conv_side);
        if (app.got_subcommand(synth)) return run_synth(synth_dir, synth_spec);
        if (app.got_subcommand(kfold))
            return run_kfold(kfold_corpus, kfold_opts, kfold_folds, kfold_stratified,
                             kfold_out_dir);
        if (app.got_subcommand(train_final))
            return run_train_final(tf_corpus, tf_opts, tf_frac, tf_stratified, tf_model);
        if (app.got_subcommand(evaluate)) return run_evaluate(eval_corpus, eval_model);
        if (app.got_subcommand(predict)) return run_predict(pred_input, pred_model);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
