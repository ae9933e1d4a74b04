#ifndef MALGRID_IMAGE_HPP
#define MALGRID_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "malgrid/tensor.hpp"

namespace malgrid {

constexpr int kDefaultInputSide = 32;

// 8-bit grayscale image, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height bytes
};

// Fixed image width for a payload of the given size. Bands: under 10 KiB
// render at 32 columns, 10-30 KiB at 64, everything larger at 128.
int width_for_payload(std::size_t payload_bytes);

// Renders a byte stream as a grayscale image: one byte per pixel,
// row-major at the table width, last partial row padded with 0x00.
GrayImage bytes_to_image(const std::vector<std::uint8_t>& payload);

// Bilinear resample to side x side. Sample points at pixel centers,
// results rounded half-up and clamped to [0, 255].
GrayImage resize_to_input(const GrayImage& img, int side = kDefaultInputSide);

// Maps pixels to [0,1] floats; output shape [side, side, 1].
// The image must be square with the expected side.
Tensor normalize(const GrayImage& img, int expected_side = kDefaultInputSide);

// Binary PGM (P5). write_pgm emits exactly "P5\n<w> <h>\n255\n" + raw bytes.
// read_pgm accepts that plus ordinary P5 variants (comments, other
// whitespace); maxval above 255 is rejected.
void write_pgm(const GrayImage& img, const std::string& path);
GrayImage read_pgm(const std::string& path);

// Parses an in-memory P5 buffer; throws DataError mentioning `origin`.
GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes, const std::string& origin);

// True if the buffer plausibly starts a P5 file.
bool looks_like_pgm(const std::vector<std::uint8_t>& bytes);

}  // namespace malgrid

#endif
