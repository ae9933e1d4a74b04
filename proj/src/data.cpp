#include "malgrid/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "malgrid/errors.hpp"
#include "malgrid/rng.hpp"

namespace malgrid {

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return bytes;
}

bool has_pgm_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".pgm";
}

}  // namespace

LabeledDataset load_corpus(const std::filesystem::path& dir, int side) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw IoError("corpus directory " + dir.string() + " does not exist");

    std::vector<std::filesystem::path> class_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.empty() || name[0] == '.') continue;
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    }
    if (class_dirs.empty())
        throw DataError("corpus " + dir.string() + " has no class subdirectories");
    std::sort(class_dirs.begin(), class_dirs.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

    LabeledDataset ds;
    for (std::size_t label = 0; label < class_dirs.size(); ++label) {
        ds.class_names.push_back(class_dirs[label].filename().string());
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(class_dirs[label])) {
            const std::string name = entry.path().filename().string();
            if (name.empty() || name[0] == '.') continue;
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        if (files.empty())
            throw DataError("class directory " + class_dirs[label].string() + " is empty");
        std::sort(files.begin(), files.end(),
                  [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
        for (const auto& file : files) {
            const std::vector<std::uint8_t> bytes = read_file_bytes(file);
            GrayImage img;
            if (has_pgm_extension(file)) {
                img = parse_pgm(bytes, file.string());
            } else if (looks_like_pgm(bytes)) {
                img = parse_pgm(bytes, file.string());
            } else {
                if (bytes.empty())
                    throw DataError(file.string() + ": empty binary");
                img = bytes_to_image(bytes);
            }
            ds.images.push_back(normalize(resize_to_input(img, side), side));
            ds.labels.push_back(static_cast<int>(label));
            ds.paths.push_back(file.string());
        }
    }
    return ds;
}

SplitIndices split_train_test(const LabeledDataset& ds, double train_frac,
                              std::uint64_t seed, bool stratified) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw std::invalid_argument("train fraction must lie strictly between 0 and 1");
    if (ds.size() < 2) throw DataError("need at least two samples to split");

    const std::vector<int> order = shuffled_indices(static_cast<int>(ds.size()), seed);
    SplitIndices out;
    if (!stratified) {
        const auto n_train = static_cast<std::size_t>(
            std::ceil(train_frac * static_cast<double>(ds.size())));
        for (std::size_t i = 0; i < order.size(); ++i)
            (i < n_train ? out.train : out.test).push_back(order[i]);
        return out;
    }

    std::vector<std::size_t> class_total(static_cast<std::size_t>(ds.num_classes()), 0);
    for (int label : ds.labels) ++class_total[static_cast<std::size_t>(label)];
    for (std::size_t c = 0; c < class_total.size(); ++c) {
        if (class_total[c] < 2) {
            std::ostringstream os;
            os << "class \"" << ds.class_names[c] << "\" has " << class_total[c]
               << " sample(s); a stratified split needs at least 2 per class"
               << " (switch stratification off to split anyway)";
            throw DataError(os.str());
        }
    }
    std::vector<std::size_t> quota(class_total.size());
    for (std::size_t c = 0; c < class_total.size(); ++c)
        quota[c] = static_cast<std::size_t>(
            std::ceil(train_frac * static_cast<double>(class_total[c])));
    std::vector<std::size_t> taken(class_total.size(), 0);
    for (int idx : order) {
        const auto c = static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(idx)]);
        if (taken[c] < quota[c]) {
            out.train.push_back(idx);
            ++taken[c];
        } else {
            out.test.push_back(idx);
        }
    }
    return out;
}

Tensor one_hot(int label, int num_classes) {
    if (label < 0 || label >= num_classes)
        throw std::invalid_argument("label out of range");
    Tensor t = Tensor::zeros({num_classes});
    t[static_cast<std::size_t>(label)] = 1.0f;
    return t;
}

std::string synth_family_name(int family) {
    std::ostringstream os;
    os << "family_" << static_cast<char>('a' + family % 26);
    if (family >= 26) os << family / 26;
    return os.str();
}

std::vector<std::uint8_t> synth_payload(const SynthSpec& spec, int family, int index) {
    if (family < 0 || family >= spec.families)
        throw std::invalid_argument("family index out of range");
    if (index < 0 || index >= spec.per_family)
        throw std::invalid_argument("sample index out of range");
    if (spec.min_bytes == 0 || spec.max_bytes < spec.min_bytes)
        throw std::invalid_argument("bad synthetic size range");

    const std::uint64_t family_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(family));
    // Periods divide the narrowest grid width, so every grid row repeats
    // the same stripes and the texture survives vertical resampling.
    static constexpr int kPeriods[] = {4, 8, 16, 32};
    Rng pattern_rng(derive_seed(family_seed, 0));
    const int period = kPeriods[pattern_rng.next_below(4)];
    std::vector<std::uint8_t> base(static_cast<std::size_t>(period));
    for (auto& b : base) b = pattern_rng.next_byte();

    Rng rng(derive_seed(family_seed, 1 + static_cast<std::uint64_t>(index)));
    const std::size_t span = spec.max_bytes - spec.min_bytes + 1;
    const std::size_t len = spec.min_bytes + static_cast<std::size_t>(rng.next_below(span));
    const int phase = static_cast<int>(rng.next_below(static_cast<std::size_t>(period)));
    std::vector<std::uint8_t> payload(len);
    for (std::size_t i = 0; i < len; ++i)
        payload[i] = base[(i + static_cast<std::size_t>(phase)) % period];
    for (std::size_t i = 0; i < len; ++i)
        if (rng.next_double() < 0.10) payload[i] = rng.next_byte();
    return payload;
}

void write_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (int f = 0; f < spec.families; ++f) {
        const std::filesystem::path fam_dir = dir / synth_family_name(f);
        std::filesystem::create_directories(fam_dir, ec);
        if (ec) throw IoError("cannot create " + fam_dir.string() + ": " + ec.message());
        for (int i = 0; i < spec.per_family; ++i) {
            const std::vector<std::uint8_t> payload = synth_payload(spec, f, i);
            std::ostringstream name;
            name << "sample_" << (i < 100 ? i < 10 ? "00" : "0" : "") << i << ".bin";
            const std::filesystem::path path = fam_dir / name.str();
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open " + path.string() + " for writing");
            out.write(reinterpret_cast<const char*>(payload.data()),
                      static_cast<std::streamsize>(payload.size()));
            if (!out) throw IoError("failed writing " + path.string());
        }
    }
}

LabeledDataset synth_dataset(const SynthSpec& spec, int side) {
    LabeledDataset ds;
    for (int f = 0; f < spec.families; ++f) {
        ds.class_names.push_back(synth_family_name(f));
        for (int i = 0; i < spec.per_family; ++i) {
            const GrayImage img = bytes_to_image(synth_payload(spec, f, i));
            ds.images.push_back(normalize(resize_to_input(img, side), side));
            ds.labels.push_back(f);
            ds.paths.push_back(synth_family_name(f) + "/" + std::to_string(i));
        }
    }
    return ds;
}

}  // namespace malgrid
