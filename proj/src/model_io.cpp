#include <array>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "malgrid/errors.hpp"
#include "malgrid/model.hpp"

// On-disk model layout, all integers little-endian:
//
//   bytes 0..7    magic "MALGRID" + format version digit
//   bytes 8..11   u32 header length H
//   bytes 12..    H bytes of UTF-8 JSON (arch, geometry, seed, names)
//   ...           raw float32 parameter blobs, weights then bias per
//                 parameterized layer, in layer order
//   last 4 bytes  u32 CRC-32 of everything before it

namespace malgrid {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'L', 'G', 'R', 'I', 'D', '1'};

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k)
            c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}

std::uint32_t crc32(const unsigned char* data, std::size_t n) {
    static const std::array<std::uint32_t, 256> table = make_crc_table();
    std::uint32_t c = 0xffffffffu;
    for (std::size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_model(const Model& m, const std::filesystem::path& path) {
    nlohmann::json header;
    header["arch"] = arch_name(m.arch);
    header["input_side"] = m.input_side;
    header["num_classes"] = m.num_classes;
    header["seed"] = m.seed;
    header["class_names"] = m.class_names;
    nlohmann::json layer_list = nlohmann::json::array();
    for (const LayerSpec& l : m.layers)
        layer_list.push_back({{"kind", layer_kind_name(l.kind)}, {"width", l.width}});
    header["layers"] = layer_list;
    const std::string header_text = header.dump();

    std::string blob;
    blob.append(kMagic, sizeof kMagic);
    append_u32(blob, static_cast<std::uint32_t>(header_text.size()));
    blob.append(header_text);
    for (const auto& p : m.params) {
        for (const Tensor* t : {&p.weights, &p.bias}) {
            if (t->size() == 0) continue;
            const std::size_t off = blob.size();
            blob.resize(off + t->size() * sizeof(float));
            std::memcpy(blob.data() + off, t->data(), t->size() * sizeof(float));
        }
    }
    append_u32(blob, crc32(reinterpret_cast<const unsigned char*>(blob.data()), blob.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    const std::string origin = path.string();

    if (blob.size() < sizeof kMagic)
        throw TruncatedFileError(origin + ": file too short for a model header");
    if (std::memcmp(bytes, kMagic, sizeof kMagic - 1) != 0)
        throw BadMagicError(origin + ": not a model file");
    if (bytes[7] != static_cast<unsigned char>(kMagic[7]))
        throw UnsupportedVersionError(origin + ": unsupported model format version '" +
                                      std::string(1, static_cast<char>(bytes[7])) + "'");
    if (blob.size() < sizeof kMagic + 4)
        throw TruncatedFileError(origin + ": file too short for a model header");
    const std::size_t header_len = read_u32(bytes + sizeof kMagic);
    const std::size_t header_off = sizeof kMagic + 4;
    if (blob.size() < header_off + header_len + 4)
        throw TruncatedFileError(origin + ": truncated model header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.begin() + static_cast<std::ptrdiff_t>(header_off),
                                       blob.begin() +
                                           static_cast<std::ptrdiff_t>(header_off + header_len));
    } catch (const nlohmann::json::exception&) {
        throw ModelFileError(origin + ": malformed model header");
    }

    Model m;
    try {
        m.arch = arch_from_name(header.at("arch").get<std::string>());
        m.input_side = header.at("input_side").get<int>();
        m.num_classes = header.at("num_classes").get<int>();
        m.seed = header.at("seed").get<std::uint64_t>();
        m.class_names = header.at("class_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
        throw ModelFileError(origin + ": model header is missing required fields");
    } catch (const std::invalid_argument& e) {
        throw ModelFileError(origin + ": " + e.what());
    }
    if (m.input_side < 1 || m.num_classes < 2)
        throw ModelFileError(origin + ": implausible model geometry");
    if (!m.class_names.empty() &&
        m.class_names.size() != static_cast<std::size_t>(m.num_classes))
        throw ModelFileError(origin + ": class name count does not match class count");

    m.layers = layers_for(m.arch, m.num_classes);
    if (header.contains("layers")) {
        const auto& ll = header["layers"];
        bool ok = ll.is_array() && ll.size() == m.layers.size();
        for (std::size_t i = 0; ok && i < m.layers.size(); ++i)
            ok = ll[i].value("kind", "") == layer_kind_name(m.layers[i].kind) &&
                 ll[i].value("width", -1) == m.layers[i].width;
        if (!ok)
            throw ModelFileError(origin + ": layer list does not match the declared architecture");
    }
    try {
        m.shapes = infer_shapes(m.layers, {m.input_side, m.input_side, 1});
    } catch (const std::invalid_argument& e) {
        throw ModelFileError(origin + ": " + e.what());
    }

    m.params.resize(m.layers.size());
    std::size_t off = header_off + header_len;
    const std::size_t payload_end = blob.size() - 4;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        if (!m.layers[i].has_params()) continue;
        const LayerSpec& spec = m.layers[i];
        const std::vector<int>& in_shape = m.shapes[i];
        std::vector<int> wshape = spec.kind == LayerKind::Conv3x3
                                      ? std::vector<int>{3, 3, in_shape[2], spec.width}
                                      : std::vector<int>{in_shape[0], spec.width};
        for (int part = 0; part < 2; ++part) {
            Tensor& t = part == 0 ? m.params[i].weights : m.params[i].bias;
            t = Tensor::zeros(part == 0 ? wshape : std::vector<int>{spec.width});
            const std::size_t nbytes = t.size() * sizeof(float);
            if (off + nbytes > payload_end)
                throw TruncatedFileError(origin + ": truncated parameter data");
            std::memcpy(t.data(), blob.data() + off, nbytes);
            off += nbytes;
        }
    }
    if (off != payload_end)
        throw ModelFileError(origin + ": unexpected trailing data after parameters");

    const std::uint32_t stored = read_u32(bytes + payload_end);
    const std::uint32_t computed = crc32(bytes, payload_end);
    if (stored != computed)
        throw ChecksumError(origin + ": checksum mismatch, file is corrupt");
    return m;
}

}  // namespace malgrid
