#pragma once

#include <cstdint>
#include <vector>

#include "photonpano/error.hpp"

namespace photonpano {

// Plain single-channel raster, row-major, pixel centers at integer
// coordinates with the origin at the top-left pixel center, x right, y down.
// All modules share this convention.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    double& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return pixels.size(); }
};

// 8-bit raster used for display-referred output and PGM/PNG interchange.
struct Image8 {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    Image8() = default;
    Image8(int w, int h, uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Linear flux image (photons/second) with a per-pixel accumulated sample
// weight. weight == 0 means "no data" at that pixel; values are only
// meaningful where weight > 0. The weight equals the effective number of
// binary samples behind the estimate, so merges of heterogeneous virtual
// exposures pool correctly.
struct LinearImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<double> weights;
    std::vector<uint8_t> saturated;  // flagged where the estimator was clamped

    LinearImage() = default;
    LinearImage(int w, int h)
        : width(w),
          height(h),
          values(static_cast<size_t>(w) * h, 0.0),
          weights(static_cast<size_t>(w) * h, 0.0),
          saturated(static_cast<size_t>(w) * h, 0) {}

    size_t size() const { return values.size(); }
    double value_at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    double weight_at(int x, int y) const { return weights[static_cast<size_t>(y) * width + x]; }

    // Fraction of pixels carrying any data.
    double valid_fraction() const {
        if (values.empty()) return 0.0;
        size_t n = 0;
        for (double w : weights)
            if (w > 0.0) ++n;
        return static_cast<double>(n) / static_cast<double>(weights.size());
    }
};

inline void require_same_dims(const LinearImage& a, const LinearImage& b, const char* what) {
    if (a.width != b.width || a.height != b.height)
        raise(ErrorKind::argument, std::string(what) + ": image dimensions differ");
}

}  // namespace photonpano
