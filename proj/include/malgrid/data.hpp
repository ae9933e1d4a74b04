#ifndef MALGRID_DATA_HPP
#define MALGRID_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "malgrid/image.hpp"
#include "malgrid/tensor.hpp"

namespace malgrid {

// A loaded corpus: one normalized [side, side, 1] tensor per sample,
// labels indexing into class_names. Samples appear in deterministic
// order (classes sorted by directory name, files sorted within each).
struct LabeledDataset {
    std::vector<Tensor> images;
    std::vector<int> labels;
    std::vector<std::string> paths;
    std::vector<std::string> class_names;

    std::size_t size() const { return images.size(); }
    int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Reads a corpus laid out as one subdirectory per class. Files ending in
// .pgm must be P5 images; anything else is sniffed, and non-PGM files are
// treated as raw binaries to be gridded. Every image is resized to
// `side` x `side` and normalized.
LabeledDataset load_corpus(const std::filesystem::path& dir, int side = kDefaultInputSide);

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

// Shuffles sample indices once with `seed` and carves off the first
// ceil(train_frac * n) for training. With `stratified` (the default) the
// same stream is walked but quotas are kept per class, so each class
// contributes ceil(train_frac * n_c) training samples.
SplitIndices split_train_test(const LabeledDataset& ds, double train_frac,
                              std::uint64_t seed, bool stratified = true);

Tensor one_hot(int label, int num_classes);

// Synthetic corpus of periodic byte textures. Each family owns a random
// repeating pattern whose period divides the narrowest grid width, so its
// image renders as vertical stripes that survive resizing; samples vary
// in length, phase, and carry a sprinkle of byte noise.
struct SynthSpec {
    int families = 8;
    int per_family = 40;
    std::uint64_t seed = 1;
    std::size_t min_bytes = 2048;
    std::size_t max_bytes = 8192;
};

std::string synth_family_name(int family);
std::vector<std::uint8_t> synth_payload(const SynthSpec& spec, int family, int index);
void write_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& dir);
LabeledDataset synth_dataset(const SynthSpec& spec, int side = kDefaultInputSide);

}  // namespace malgrid

#endif
