#include "photonpano/photon_cube.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "photonpano/image_io.hpp"

namespace photonpano {

namespace {

constexpr uint8_t kMagic[4] = {0x50, 0x43, 0x55, 0x42};  // "PCUB"
constexpr uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    uint8_t bytes[sizeof(T)];
    uint64_t bits;
    if constexpr (sizeof(T) == 8 && std::is_floating_point_v<T>) {
        std::memcpy(&bits, &value, 8);
    } else {
        bits = static_cast<uint64_t>(value);
    }
    for (size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<uint8_t>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    uint8_t bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) raise(ErrorKind::format, "truncated .pcube header");
    uint64_t bits = 0;
    for (size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    if constexpr (sizeof(T) == 8 && std::is_floating_point_v<T>) {
        T value;
        std::memcpy(&value, &bits, 8);
        return value;
    } else {
        return static_cast<T>(bits);
    }
}

}  // namespace

PhotonCube::PhotonCube(int width, int height, int64_t num_frames, double tau)
    : width_(width), height_(height), num_frames_(num_frames), tau_(tau) {
    if (width <= 0 || height <= 0) raise(ErrorKind::argument, "photon cube dimensions must be positive");
    if (num_frames < 1) raise(ErrorKind::argument, "photon cube needs at least one frame");
    if (!(tau > 0.0)) raise(ErrorKind::argument, "tau must be positive");
    data_.assign(frame_bytes() * static_cast<size_t>(num_frames), 0);
}

void PhotonCube::decode_frame(int64_t frame, Image& out) const {
    if (out.width != width_ || out.height != height_) out = Image(width_, height_);
    const uint8_t* src = frame_data(frame);
    const size_t rb = row_bytes();
    for (int y = 0; y < height_; ++y) {
        const uint8_t* row = src + static_cast<size_t>(y) * rb;
        double* dst = out.pixels.data() + static_cast<size_t>(y) * width_;
        for (int x = 0; x < width_; ++x) dst[x] = (row[x >> 3] >> (7 - (x & 7))) & 1;
    }
}

Image PhotonCube::decode_frame(int64_t frame) const {
    Image out(width_, height_);
    decode_frame(frame, out);
    return out;
}

void write_pcube(const PhotonCube& cube, std::ostream& sink) {
    sink.write(reinterpret_cast<const char*>(kMagic), 4);
    write_le<uint32_t>(sink, kVersion);
    write_le<uint32_t>(sink, static_cast<uint32_t>(cube.width()));
    write_le<uint32_t>(sink, static_cast<uint32_t>(cube.height()));
    write_le<uint64_t>(sink, static_cast<uint64_t>(cube.num_frames()));
    write_le<double>(sink, cube.tau());
    sink.write(reinterpret_cast<const char*>(cube.data().data()),
               static_cast<std::streamsize>(cube.data().size()));
    if (!sink) raise(ErrorKind::io, "failed writing .pcube stream");
}

void write_pcube(const PhotonCube& cube, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::io, "cannot write " + path.string());
    write_pcube(cube, out);
}

PhotonCube read_pcube(std::istream& source) {
    uint8_t magic[4];
    source.read(reinterpret_cast<char*>(magic), 4);
    if (!source || std::memcmp(magic, kMagic, 4) != 0)
        raise(ErrorKind::format, "not a .pcube stream (bad magic)");
    const uint32_t version = read_le<uint32_t>(source);
    if (version != kVersion)
        raise(ErrorKind::format, "unsupported .pcube version " + std::to_string(version));
    const uint32_t width = read_le<uint32_t>(source);
    const uint32_t height = read_le<uint32_t>(source);
    const uint64_t num_frames = read_le<uint64_t>(source);
    const double tau = read_le<double>(source);
    if (width == 0 || height == 0 || num_frames == 0 || !(tau > 0.0))
        raise(ErrorKind::format, ".pcube header fails size arithmetic");

    PhotonCube cube(static_cast<int>(width), static_cast<int>(height),
                    static_cast<int64_t>(num_frames), tau);
    source.read(reinterpret_cast<char*>(cube.data().data()),
                static_cast<std::streamsize>(cube.data().size()));
    if (static_cast<size_t>(source.gcount()) != cube.data().size())
        raise(ErrorKind::format, ".pcube data length mismatch: expected " +
                                     std::to_string(cube.data().size()) + " bytes, got " +
                                     std::to_string(source.gcount()));
    return cube;
}

PhotonCube read_pcube(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot open " + path.string());
    return read_pcube(in);
}

PhotonCube read_pgm_directory(const std::filesystem::path& dir, double tau) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".pbm" || ext == ".pnm") files.push_back(entry.path());
    }
    if (files.empty()) raise(ErrorKind::argument, "no PGM/PBM frames in " + dir.string());
    std::sort(files.begin(), files.end());

    Image8 first = read_pnm(files.front());
    PhotonCube cube(first.width, first.height, static_cast<int64_t>(files.size()), tau);
    for (size_t i = 0; i < files.size(); ++i) {
        Image8 frame = i == 0 ? std::move(first) : read_pnm(files[i]);
        if (frame.width != cube.width() || frame.height != cube.height())
            raise(ErrorKind::format, files[i].string() + ": frame dimensions differ");
        for (int y = 0; y < cube.height(); ++y)
            for (int x = 0; x < cube.width(); ++x)
                if (frame.at(x, y) != 0) cube.set_pixel(static_cast<int64_t>(i), x, y, true);
    }
    return cube;
}

Image mean_frame(const PhotonCube& cube, std::span<const int64_t> indices) {
    if (indices.empty()) raise(ErrorKind::argument, "mean_frame: empty index set");
    for (int64_t i : indices)
        if (i < 0 || i >= cube.num_frames())
            raise(ErrorKind::argument, "mean_frame: frame index out of range");

    Image acc(cube.width(), cube.height(), 0.0);
    const size_t rb = cube.row_bytes();
    for (int64_t f : indices) {
        const uint8_t* src = cube.frame_data(f);
        for (int y = 0; y < cube.height(); ++y) {
            const uint8_t* row = src + static_cast<size_t>(y) * rb;
            double* dst = acc.pixels.data() + static_cast<size_t>(y) * cube.width();
            for (int x = 0; x < cube.width(); ++x) dst[x] += (row[x >> 3] >> (7 - (x & 7))) & 1;
        }
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (double& v : acc.pixels) v *= inv;
    return acc;
}

namespace {

inline double flux_from_fraction(double mean, double tau, double n, uint8_t* saturated) {
    *saturated = 0;
    if (mean >= 1.0) {
        mean = 1.0 - 1.0 / (2.0 * std::max(n, 1.0));
        *saturated = 1;
    }
    return -std::log1p(-mean) / tau;
}

}  // namespace

LinearImage mle_flux(const Image& mean, double tau, double n) {
    if (!(tau > 0.0)) raise(ErrorKind::argument, "mle_flux: tau must be positive");
    if (!(n >= 1.0)) raise(ErrorKind::argument, "mle_flux: sample count must be >= 1");
    LinearImage out(mean.width, mean.height);
    for (size_t i = 0; i < mean.pixels.size(); ++i) {
        const double m = mean.pixels[i];
        if (m < 0.0 || m > 1.0) raise(ErrorKind::argument, "mle_flux: mean outside [0, 1]");
        out.values[i] = flux_from_fraction(m, tau, n, &out.saturated[i]);
        out.weights[i] = n;
    }
    return out;
}

LinearImage mle_flux(const Image& mean, double tau, const Image& weights) {
    if (!(tau > 0.0)) raise(ErrorKind::argument, "mle_flux: tau must be positive");
    if (mean.width != weights.width || mean.height != weights.height)
        raise(ErrorKind::argument, "mle_flux: weight image dimensions differ");
    LinearImage out(mean.width, mean.height);
    for (size_t i = 0; i < mean.pixels.size(); ++i) {
        const double w = weights.pixels[i];
        if (w <= 0.0) continue;
        const double m = std::clamp(mean.pixels[i], 0.0, 1.0);
        out.values[i] = flux_from_fraction(m, tau, w, &out.saturated[i]);
        out.weights[i] = w;
    }
    return out;
}

}  // namespace photonpano
