#include "photonpano/warp.hpp"

#include <cmath>

namespace photonpano {

namespace {
constexpr double kDegenerateDet = 1e-12;
constexpr double kDegenerateSlot = 1e-12;
}  // namespace

Homography Homography::from_matrix(const std::array<double, 9>& raw) {
    if (std::abs(raw[8]) < kDegenerateSlot)
        raise(ErrorKind::degeneracy, "homography normalization slot is zero");
    Homography h;
    for (int i = 0; i < 9; ++i) h.m[i] = raw[i] / raw[8];
    h.m[8] = 1.0;
    return h;
}

double Homography::det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography from_params(const WarpParams& params) {
    if (!params.finite()) raise(ErrorKind::argument, "warp parameters must be finite");
    const auto& p = params.p;
    Homography h = Homography::from_matrix(
        {1.0 + p[0], p[2], p[4], p[1], 1.0 + p[3], p[5], p[6], p[7], 1.0});
    if (std::abs(h.det()) < kDegenerateDet)
        raise(ErrorKind::degeneracy, "warp parameters induce a singular matrix");
    return h;
}

WarpParams to_params(const Homography& h) {
    if (std::abs(h.m[8]) < kDegenerateSlot)
        raise(ErrorKind::degeneracy, "homography normalization slot is zero");
    const double s = 1.0 / h.m[8];
    WarpParams w;
    w.p = {h.m[0] * s - 1.0, h.m[3] * s, h.m[1] * s, h.m[4] * s - 1.0,
           h.m[2] * s,       h.m[5] * s, h.m[6] * s, h.m[7] * s};
    return w;
}

Homography compose(const Homography& a, const Homography& b) {
    std::array<double, 9> r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k)
                acc += a.m[static_cast<size_t>(i) * 3 + k] * b.m[static_cast<size_t>(k) * 3 + j];
            r[static_cast<size_t>(i) * 3 + j] = acc;
        }
    return Homography::from_matrix(r);
}

Homography invert(const Homography& a) {
    const auto& m = a.m;
    const double d = a.det();
    if (std::abs(d) < kDegenerateDet)
        raise(ErrorKind::degeneracy, "homography is near-singular");
    std::array<double, 9> inv = {
        (m[4] * m[8] - m[5] * m[7]), (m[2] * m[7] - m[1] * m[8]), (m[1] * m[5] - m[2] * m[4]),
        (m[5] * m[6] - m[3] * m[8]), (m[0] * m[8] - m[2] * m[6]), (m[2] * m[3] - m[0] * m[5]),
        (m[3] * m[7] - m[4] * m[6]), (m[1] * m[6] - m[0] * m[7]), (m[0] * m[4] - m[1] * m[3])};
    for (double& v : inv) v /= d;
    return Homography::from_matrix(inv);
}

Homography scale_warp(const Homography& w, double s) {
    if (!(s > 0.0)) raise(ErrorKind::argument, "scale factor must be positive");
    // diag(s,s,1) * w * diag(1/s,1/s,1)
    std::array<double, 9> r = w.m;
    r[2] *= s;
    r[5] *= s;
    r[6] /= s;
    r[7] /= s;
    return Homography::from_matrix(r);
}

Homography scaling(double s) {
    if (!(s > 0.0)) raise(ErrorKind::argument, "scale factor must be positive");
    return Homography::from_matrix({s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, 1.0});
}

namespace {

// Shared inverse-warp loop. ValueFn(x, y) -> pixel value, WeightFn -> sample
// weight at integer coordinates (0 outside handled by the caller's bounds).
template <typename TapFn>
void inverse_warp_loop(int in_width, int in_height, const Homography& w, int out_width,
                       int out_height, Vec2 offset, TapFn&& tap) {
    const Homography winv = invert(w);
    for (int oy = 0; oy < out_height; ++oy) {
        for (int ox = 0; ox < out_width; ++ox) {
            const double gx = ox + offset.x;
            const double gy = oy + offset.y;
            const double d = winv.m[6] * gx + winv.m[7] * gy + winv.m[8];
            if (d <= kDegenerateSlot) continue;  // behind the camera plane
            const double sx = (winv.m[0] * gx + winv.m[1] * gy + winv.m[2]) / d;
            const double sy = (winv.m[3] * gx + winv.m[4] * gy + winv.m[5]) / d;
            if (sx <= -1.0 || sy <= -1.0 || sx >= in_width || sy >= in_height) continue;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0;
            const double fy = sy - y0;
            const double c[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy,
                                 fx * fy};
            const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
            const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
            tap(ox, oy, tx, ty, c);
        }
    }
}

}  // namespace

WarpedImage apply_warp(const Image& input, const Homography& w, int out_width, int out_height,
                       Vec2 out_offset) {
    if (out_width <= 0 || out_height <= 0)
        raise(ErrorKind::argument, "apply_warp: output dimensions must be positive");
    WarpedImage out{Image(out_width, out_height), Image(out_width, out_height)};
    accumulate_warp(input, w, out.values, out.weights, out_offset);
    return out;
}

void accumulate_warp(const Image& input, const Homography& w, Image& sum, Image& weight_sum,
                     Vec2 out_offset) {
    if (sum.width != weight_sum.width || sum.height != weight_sum.height)
        raise(ErrorKind::argument, "accumulate_warp: canvas dimensions differ");
    inverse_warp_loop(
        input.width, input.height, w, sum.width, sum.height, out_offset,
        [&](int ox, int oy, const int* tx, const int* ty, const double* c) {
            double num = 0.0, den = 0.0;
            for (int k = 0; k < 4; ++k) {
                if (tx[k] < 0 || ty[k] < 0 || tx[k] >= input.width || ty[k] >= input.height)
                    continue;
                num += c[k] * input.at(tx[k], ty[k]);
                den += c[k];
            }
            if (den > 0.0) {
                sum.at(ox, oy) += num;
                weight_sum.at(ox, oy) += den;
            }
        });
}

WarpedImage apply_warp(const LinearImage& input, const Homography& w, int out_width,
                       int out_height, Vec2 out_offset) {
    if (out_width <= 0 || out_height <= 0)
        raise(ErrorKind::argument, "apply_warp: output dimensions must be positive");
    WarpedImage out{Image(out_width, out_height), Image(out_width, out_height)};
    inverse_warp_loop(
        input.width, input.height, w, out_width, out_height, out_offset,
        [&](int ox, int oy, const int* tx, const int* ty, const double* c) {
            double num = 0.0, den = 0.0;
            for (int k = 0; k < 4; ++k) {
                if (tx[k] < 0 || ty[k] < 0 || tx[k] >= input.width || ty[k] >= input.height)
                    continue;
                const double wt = c[k] * input.weight_at(tx[k], ty[k]);
                num += wt * input.value_at(tx[k], ty[k]);
                den += wt;
            }
            if (den > 0.0) {
                out.values.at(ox, oy) = num / den;
                out.weights.at(ox, oy) = den;
            }
        });
    return out;
}

}  // namespace photonpano
