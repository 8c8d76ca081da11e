#pragma once

#include <array>
#include <cmath>

#include "photonpano/image.hpp"

namespace photonpano {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// The eight free parameters of a projective warp,
//   H = [[1+p1, p3, p5], [p2, 1+p4, p6], [p7, p8, 1]].
// All zeros is the identity. Warps are stored and interpolated in this
// parameterization; matrices are derived values.
struct WarpParams {
    std::array<double, 8> p{};

    static WarpParams translation(double dx, double dy) {
        WarpParams w;
        w.p[4] = dx;
        w.p[5] = dy;
        return w;
    }

    bool finite() const {
        for (double v : p)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Normalized 3x3 projective matrix, row-major, m[8] == 1.
struct Homography {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return Homography{}; }

    // Normalizes so m[8] == 1; the slot must not vanish.
    static Homography from_matrix(const std::array<double, 9>& raw);

    double operator()(int row, int col) const { return m[static_cast<size_t>(row) * 3 + col]; }

    Vec2 apply(Vec2 pt) const {
        double d = m[6] * pt.x + m[7] * pt.y + m[8];
        return {(m[0] * pt.x + m[1] * pt.y + m[2]) / d,
                (m[3] * pt.x + m[4] * pt.y + m[5]) / d};
    }

    // Perspective denominator at a point; non-positive values mean the point
    // maps behind the camera plane.
    double denominator(Vec2 pt) const { return m[6] * pt.x + m[7] * pt.y + m[8]; }

    double det() const;
};

Homography from_params(const WarpParams& params);
WarpParams to_params(const Homography& h);

Homography compose(const Homography& a, const Homography& b);  // a * b, b applied first
Homography invert(const Homography& a);

// Conjugation by S = diag(s, s, 1): maps the warp onto the s-times upsampled
// pixel grid (used for super-resolution rendering and pyramid levels).
Homography scale_warp(const Homography& w, double s);

// Plain diag(s, s, 1). Composing scaling(s) * w turns a native-grid warp
// into one that drops s-times upsampled output coordinates onto the native
// input grid, which is how native frames accumulate onto a super-resolved
// canvas.
Homography scaling(double s);

struct WarpedImage {
    Image values;
    Image weights;
};

// Inverse warping with bilinear sampling. For each output pixel x the input
// is sampled at w^-1 (x + out_offset); weights are the bilinearly
// interpolated in-bounds mask in [0, 1]. Out-of-bounds taps contribute
// value 0 and weight 0, so values carry the partial in-bounds sum and
// values/weights is the normalized sample where it matters.
WarpedImage apply_warp(const Image& input, const Homography& w, int out_width, int out_height,
                       Vec2 out_offset = {0.0, 0.0});

// Same, propagating the input's own sample weights: the output weight is the
// bilinear interpolation of the input weights (zero outside), and values are
// the weight-normalized bilinear samples.
WarpedImage apply_warp(const LinearImage& input, const Homography& w, int out_width,
                       int out_height, Vec2 out_offset = {0.0, 0.0});

// Fused accumulation used by the merge and render loops: adds value*weight
// into `sum` and weight into `weight_sum` instead of materializing the
// warped frame. Identical arithmetic to apply_warp on a plain image.
void accumulate_warp(const Image& input, const Homography& w, Image& sum, Image& weight_sum,
                     Vec2 out_offset = {0.0, 0.0});

}  // namespace photonpano
