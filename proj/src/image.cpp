#include "malgrid/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "malgrid/errors.hpp"

namespace malgrid {

int width_for_payload(std::size_t payload_bytes) {
    if (payload_bytes < 10 * 1024) return 32;
    if (payload_bytes < 30 * 1024) return 64;
    return 128;
}

GrayImage bytes_to_image(const std::vector<std::uint8_t>& payload) {
    if (payload.empty()) throw DataError("empty binary");
    GrayImage img;
    img.width = width_for_payload(payload.size());
    img.height = static_cast<int>((payload.size() + static_cast<std::size_t>(img.width) - 1) /
                                  static_cast<std::size_t>(img.width));
    img.pixels.assign(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height), 0);
    std::copy(payload.begin(), payload.end(), img.pixels.begin());
    return img;
}

GrayImage resize_to_input(const GrayImage& img, int side) {
    if (side < 1) throw std::invalid_argument("resize side must be >= 1");
    if (img.width < 1 || img.height < 1 ||
        img.pixels.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height))
        throw std::invalid_argument("resize_to_input: malformed image");

    GrayImage out;
    out.width = side;
    out.height = side;
    out.pixels.resize(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));

    const double sx = static_cast<double>(img.width) / side;
    const double sy = static_cast<double>(img.height) / side;
    for (int y = 0; y < side; ++y) {
        // Pixel-center mapping; degenerates to the identity when sizes match.
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::min(std::max(fy, 0.0), static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < side; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;

            const double p00 = img.pixels[static_cast<std::size_t>(y0) * img.width + x0];
            const double p01 = img.pixels[static_cast<std::size_t>(y0) * img.width + x1];
            const double p10 = img.pixels[static_cast<std::size_t>(y1) * img.width + x0];
            const double p11 = img.pixels[static_cast<std::size_t>(y1) * img.width + x1];
            const double top = p00 + (p01 - p00) * wx;
            const double bot = p10 + (p11 - p10) * wx;
            const double v = top + (bot - top) * wy;

            const double rounded = std::floor(v + 0.5);
            out.pixels[static_cast<std::size_t>(y) * side + x] =
                static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, rounded)));
        }
    }
    return out;
}

Tensor normalize(const GrayImage& img, int expected_side) {
    if (img.width != img.height || img.width != expected_side) {
        throw std::invalid_argument("normalize expects a square " + std::to_string(expected_side) +
                                    "x" + std::to_string(expected_side) + " image, got " +
                                    std::to_string(img.width) + "x" + std::to_string(img.height));
    }
    std::vector<float> values(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        values[i] = static_cast<float>(img.pixels[i]) / 255.0f;
    return Tensor({img.height, img.width, 1}, std::move(values));
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write failed: " + path);
}

namespace {

// Skips whitespace and '#' comment lines, then parses a decimal field.
bool next_pgm_int(const std::vector<std::uint8_t>& b, std::size_t& pos, long& value) {
    while (pos < b.size()) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= b.size() || !std::isdigit(b[pos])) return false;
    value = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        value = value * 10 + (b[pos] - '0');
        if (value > 1000000000L) return false;
        ++pos;
    }
    return true;
}

}  // namespace

bool looks_like_pgm(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 3 && bytes[0] == 'P' && bytes[1] == '5' && std::isspace(bytes[2]);
}

GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (!looks_like_pgm(bytes)) throw DataError("not a P5 PGM file: " + origin);
    std::size_t pos = 2;
    long w = 0, h = 0, maxval = 0;
    if (!next_pgm_int(bytes, pos, w) || !next_pgm_int(bytes, pos, h) ||
        !next_pgm_int(bytes, pos, maxval))
        throw DataError("malformed PGM header: " + origin);
    if (w < 1 || h < 1) throw DataError("malformed PGM dimensions: " + origin);
    if (maxval < 1 || maxval > 255) throw DataError("unsupported PGM maxval: " + origin);
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw DataError("malformed PGM header: " + origin);
    ++pos;  // single whitespace byte before the raster

    const std::size_t want = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < want) throw DataError("truncated PGM raster: " + origin);

    GrayImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + want));
    return img;
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_pgm(bytes, path);
}

}  // namespace malgrid
