#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "photonpano/image.hpp"

namespace photonpano {

// Bit-packed sequence of binary frames with exposure metadata. Layout is
// frame-major, row-major, 8 pixels per byte, most-significant bit first,
// each row padded to a byte boundary. Immutable once filled; reads are
// safely shareable across threads.
class PhotonCube {
public:
    PhotonCube(int width, int height, int64_t num_frames, double tau);

    int width() const { return width_; }
    int height() const { return height_; }
    int64_t num_frames() const { return num_frames_; }
    double tau() const { return tau_; }

    size_t row_bytes() const { return (static_cast<size_t>(width_) + 7) / 8; }
    size_t frame_bytes() const { return row_bytes() * static_cast<size_t>(height_); }

    bool pixel(int64_t frame, int x, int y) const {
        const uint8_t byte =
            data_[static_cast<size_t>(frame) * frame_bytes() + static_cast<size_t>(y) * row_bytes() +
                  (static_cast<size_t>(x) >> 3)];
        return (byte >> (7 - (x & 7))) & 1;
    }

    void set_pixel(int64_t frame, int x, int y, bool on) {
        uint8_t& byte =
            data_[static_cast<size_t>(frame) * frame_bytes() + static_cast<size_t>(y) * row_bytes() +
                  (static_cast<size_t>(x) >> 3)];
        const uint8_t mask = static_cast<uint8_t>(1u << (7 - (x & 7)));
        byte = on ? (byte | mask) : (byte & ~mask);
    }

    // Decodes one frame into a 0/1-valued raster.
    void decode_frame(int64_t frame, Image& out) const;
    Image decode_frame(int64_t frame) const;

    uint8_t* frame_data(int64_t frame) { return data_.data() + static_cast<size_t>(frame) * frame_bytes(); }
    const uint8_t* frame_data(int64_t frame) const {
        return data_.data() + static_cast<size_t>(frame) * frame_bytes();
    }

    const std::vector<uint8_t>& data() const { return data_; }
    std::vector<uint8_t>& data() { return data_; }

private:
    int width_;
    int height_;
    int64_t num_frames_;
    double tau_;
    std::vector<uint8_t> data_;
};

// .pcube container: magic "PCUB", then little-endian u32 version = 1,
// u32 width, u32 height, u64 num_frames, f64 tau, then the packed frames.
void write_pcube(const PhotonCube& cube, std::ostream& sink);
void write_pcube(const PhotonCube& cube, const std::filesystem::path& path);
PhotonCube read_pcube(std::istream& source);
PhotonCube read_pcube(const std::filesystem::path& path);

// Ingestion convenience: a directory of 1-bit or 8-bit grayscale PGM/PBM
// files, one frame each, ordered by filename; any nonzero pixel becomes 1.
PhotonCube read_pgm_directory(const std::filesystem::path& dir, double tau);

// Per-pixel arithmetic mean of the selected binary frames, in [0, 1].
Image mean_frame(const PhotonCube& cube, std::span<const int64_t> indices);

// Maximum likelihood flux from a mean of n binary observations:
//   flux = -(1/tau) * ln(1 - mean),
// with mean == 1 clamped to 1 - 1/(2n) and flagged saturated. Output weights
// are set to n.
LinearImage mle_flux(const Image& mean, double tau, double n);

// Per-pixel sample-count variant used when merging warped frames: weight 0
// pixels stay "no data", everything else follows the scalar rule with that
// pixel's own n.
LinearImage mle_flux(const Image& mean, double tau, const Image& weights);

}  // namespace photonpano
