#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "photonpano/image.hpp"

namespace photonpano {

// Netpbm support: P2/P5 grayscale (maxval <= 255) and P1/P4 bitmaps.
// Bitmap bits are mapped to 0/255 so "any nonzero pixel" semantics apply
// uniformly downstream.
Image8 read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Image8& image);

// Decoded 8-bit PNG, 1 or 3 channels (alpha stripped, palette expanded).
struct DecodedPng {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;  // interleaved, row-major
};

DecodedPng read_png(const std::filesystem::path& path);
void write_png8(const std::filesystem::path& path, const Image8& image);
void write_png16(const std::filesystem::path& path, int width, int height,
                 const std::vector<uint16_t>& pixels);

}  // namespace photonpano
