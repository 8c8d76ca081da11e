#include "photonpano/registration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace photonpano {

namespace {

constexpr double kValidWeight = 0.5;  // exclusion threshold on sample weights

// Lag-1 noise correlation per axis after the binomial pre-smooth below
// ([1,4,6,4,1]/16: sum k_i k_{i+1} / sum k_i^2 = 56/70).
constexpr double kSmoothedNoiseRho = 0.8;

struct Level {
    int width = 0;
    int height = 0;
    std::vector<double> intensity;  // log-tonemapped flux, pre-smoothed
    std::vector<double> weight;     // accumulated sample weight, averaged per level
    std::vector<double> variance;   // relative per-pixel noise variance of intensity
    std::vector<double> gx, gy;     // central differences, pixel units
    std::vector<uint8_t> grad_valid;
};

// Weight-aware separable binomial blur on the intensity plane. Photon-noise
// SSD has a floor that depends on the warp's fractional pixel phase
// (bilinear resampling smooths noise at half-pixel phases and not at integer
// ones); removing most of the noise's high-frequency power shrinks that
// term, and the variance-weighted loss below cancels what remains.
void binomial_smooth(Level& lvl) {
    static const double kernel[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    std::vector<double> tmp(lvl.intensity.size(), 0.0);
    std::vector<double> tmpw(lvl.intensity.size(), 0.0);
    for (int y = 0; y < lvl.height; ++y)
        for (int x = 0; x < lvl.width; ++x) {
            double num = 0.0, den = 0.0;
            for (int k = -2; k <= 2; ++k) {
                const int sx = x + k;
                if (sx < 0 || sx >= lvl.width) continue;
                const size_t idx = static_cast<size_t>(y) * lvl.width + sx;
                const double w = kernel[k + 2] * lvl.weight[idx];
                num += w * lvl.intensity[idx];
                den += w;
            }
            const size_t o = static_cast<size_t>(y) * lvl.width + x;
            if (den > 0.0) tmp[o] = num / den;
            tmpw[o] = den;
        }
    for (int y = 0; y < lvl.height; ++y)
        for (int x = 0; x < lvl.width; ++x) {
            double num = 0.0, den = 0.0;
            for (int k = -2; k <= 2; ++k) {
                const int sy = y + k;
                if (sy < 0 || sy >= lvl.height) continue;
                const size_t idx = static_cast<size_t>(sy) * lvl.width + x;
                const double w = kernel[k + 2] * tmpw[idx];
                num += w * tmp[idx];
                den += w;
            }
            const size_t o = static_cast<size_t>(y) * lvl.width + x;
            if (den > 0.0) lvl.intensity[o] = num / den;
        }
}

// Relative log-domain variance of a flux estimate built from w binary
// samples: Var(log flux_hat) ~= (e^{phi tau} - 1) / (w (phi tau)^2) by the
// delta method. Without tau only the sample count is usable.
double log_variance(double flux, double weight, double tau) {
    const double w = std::max(weight, 1e-9);
    if (tau > 0.0) {
        const double x = std::max(flux * tau, 1e-6);
        return std::expm1(x) / (w * x * x);
    }
    return 1.0 / w;
}

Level make_base_level(const LinearImage& img, double log_eps, double tau) {
    Level lvl;
    lvl.width = img.width;
    lvl.height = img.height;
    lvl.intensity.resize(img.size());
    lvl.weight = img.weights;
    lvl.variance.assign(img.size(), 0.0);

    // The exclusion threshold scales with the image's typical sample count:
    // border pixels backed by a few samples are the noisiest and carry the
    // most affine/projective leverage.
    std::vector<double> positive;
    positive.reserve(img.size());
    for (double w : img.weights)
        if (w > 0.0) positive.push_back(w);
    double cutoff = kValidWeight;
    if (!positive.empty()) {
        const size_t mid = positive.size() / 2;
        std::nth_element(positive.begin(), positive.begin() + static_cast<ptrdiff_t>(mid),
                         positive.end());
        cutoff = std::max(kValidWeight, 0.5 * positive[mid]);
    }
    for (double& w : lvl.weight)
        if (w < cutoff) w = 0.0;

    for (size_t i = 0; i < img.size(); ++i) {
        if (lvl.weight[i] > 0.0) {
            lvl.intensity[i] = std::log(img.values[i] + log_eps);
            lvl.variance[i] = log_variance(img.values[i], lvl.weight[i], tau);
        }
    }
    binomial_smooth(lvl);
    return lvl;
}

Level downsample(const Level& in) {
    Level out;
    out.width = std::max(1, in.width / 2);
    out.height = std::max(1, in.height / 2);
    const size_t n = static_cast<size_t>(out.width) * out.height;
    out.intensity.assign(n, 0.0);
    out.weight.assign(n, 0.0);
    out.variance.assign(n, 0.0);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            double num = 0.0, den = 0.0, var = 0.0;
            int taps = 0;
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    const int sx = 2 * x + dx;
                    const int sy = 2 * y + dy;
                    if (sx >= in.width || sy >= in.height) continue;
                    const size_t idx = static_cast<size_t>(sy) * in.width + sx;
                    num += in.weight[idx] * in.intensity[idx];
                    var += in.weight[idx] * in.variance[idx];
                    den += in.weight[idx];
                    ++taps;
                }
            }
            const size_t o = static_cast<size_t>(y) * out.width + x;
            if (den > 0.0) {
                out.intensity[o] = num / den;
                out.variance[o] = var / den;  // relative map; level scaling cancels
            }
            out.weight[o] = taps > 0 ? den / taps : 0.0;
        }
    }
    return out;
}

void compute_gradients(Level& lvl) {
    const size_t n = lvl.intensity.size();
    lvl.gx.assign(n, 0.0);
    lvl.gy.assign(n, 0.0);
    lvl.grad_valid.assign(n, 0);
    auto valid = [&](int x, int y) {
        return lvl.weight[static_cast<size_t>(y) * lvl.width + x] > 0.0;
    };
    for (int y = 1; y + 1 < lvl.height; ++y)
        for (int x = 1; x + 1 < lvl.width; ++x) {
            if (!valid(x, y) || !valid(x - 1, y) || !valid(x + 1, y) || !valid(x, y - 1) ||
                !valid(x, y + 1))
                continue;
            const size_t i = static_cast<size_t>(y) * lvl.width + x;
            lvl.gx[i] = 0.5 * (lvl.intensity[i + 1] - lvl.intensity[i - 1]);
            lvl.gy[i] = 0.5 * (lvl.intensity[i + static_cast<size_t>(lvl.width)] -
                               lvl.intensity[i - static_cast<size_t>(lvl.width)]);
            lvl.grad_valid[i] = 1;
        }
}

int auto_levels(int width, int height) {
    const int min_dim = std::min(width, height);
    if (min_dim < 64) return 1;
    return static_cast<int>(std::floor(std::log2(min_dim / 32.0))) + 1;
}

// Maps level-k pixel coordinates to full-resolution coordinates. One
// downsample step sends pixel x to 2x + 0.5 under the pixel-center
// convention, so level k composes to scale 2^k with offset (2^k - 1) / 2.
Homography level_to_full(int level) {
    const double s = std::pow(2.0, level);
    return Homography::from_matrix({s, 0.0, (s - 1.0) * 0.5, 0.0, s, (s - 1.0) * 0.5, 0.0, 0.0, 1.0});
}

// Centered unit coordinates keep the eight parameters comparably scaled, so
// the damping term and the update-norm stopping rule are meaningful.
Homography normalizer(int width, int height) {
    const double q = 2.0 / static_cast<double>(std::max(width, height));
    const double cx = (width - 1) * 0.5;
    const double cy = (height - 1) * 0.5;
    return Homography::from_matrix({q, 0.0, -q * cx, 0.0, q, -q * cy, 0.0, 0.0, 1.0});
}

struct TemplateSample {
    double xn, yn;  // normalized coordinates
    double px, py;  // level pixel coordinates
    double value;
    double gx, gy;  // template gradient, pixel units
    double variance;
};

struct MovingSample {
    bool valid;
    double value;
    double gx, gy;
    double variance;  // includes the phase-dependent interpolation factor
};

// Noise attenuation of bilinear interpolation at fractional offset f for
// noise with lag-1 correlation rho (per axis, separable).
inline double interp_noise_gain(double f, double rho) {
    return 1.0 - 2.0 * f * (1.0 - f) * (1.0 - rho);
}

// Bilinear fetch of intensity, gradient and variance with one shared set of
// taps, so the sampled noise in all planes stays consistent.
MovingSample sample_moving(const Level& lvl, double x, double y) {
    if (x <= -1.0 || y <= -1.0 || x >= lvl.width || y >= lvl.height) return {false, 0, 0, 0, 0};
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const double c[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
    double num = 0.0, den = 0.0, gx = 0.0, gy = 0.0, var = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (tx[k] < 0 || ty[k] < 0 || tx[k] >= lvl.width || ty[k] >= lvl.height)
            return {false, 0, 0, 0, 0};
        const size_t idx = static_cast<size_t>(ty[k]) * lvl.width + tx[k];
        if (!lvl.grad_valid[idx]) return {false, 0, 0, 0, 0};
        const double w = c[k] * lvl.weight[idx];
        num += w * lvl.intensity[idx];
        gx += w * lvl.gx[idx];
        gy += w * lvl.gy[idx];
        var += w * lvl.variance[idx];
        den += w;
    }
    if (den <= 0.0) return {false, 0, 0, 0, 0};
    const double gain = interp_noise_gain(fx, kSmoothedNoiseRho) *
                        interp_noise_gain(fy, kSmoothedNoiseRho);
    return {true, num / den, gx / den, gy / den, gain * var / den};
}

RegistrationResult register_photometric(const LinearImage& moving, const LinearImage& fixed,
                                        const WarpParams& init, const RegisterOptions& opts) {
    require_same_dims(moving, fixed, "register");
    if (fixed.valid_fraction() <= 0.5 || moving.valid_fraction() <= 0.5)
        raise(ErrorKind::overlap, "register: more than half of the pixels carry no data");

    // One epsilon for both images keeps the loss symmetric under swapping.
    double mean_flux = 0.0;
    size_t mean_n = 0;
    for (const LinearImage* img : {&moving, &fixed})
        for (size_t i = 0; i < img->size(); ++i)
            if (img->weights[i] > 0.0) {
                mean_flux += img->values[i];
                ++mean_n;
            }
    mean_flux = mean_n > 0 ? mean_flux / static_cast<double>(mean_n) : 0.0;
    const double log_eps = std::max(1e-3 * mean_flux, 1e-12);

    int levels = opts.pyramid_levels > 0 ? opts.pyramid_levels : auto_levels(fixed.width, fixed.height);
    levels = std::max(1, std::min(levels, 12));

    std::vector<Level> fixed_pyr{make_base_level(fixed, log_eps, opts.tau)};
    std::vector<Level> moving_pyr{make_base_level(moving, log_eps, opts.tau)};
    for (int l = 1; l < levels; ++l) {
        if (std::min(fixed_pyr.back().width, fixed_pyr.back().height) < 8) break;
        fixed_pyr.push_back(downsample(fixed_pyr.back()));
        moving_pyr.push_back(downsample(moving_pyr.back()));
    }
    levels = static_cast<int>(fixed_pyr.size());
    for (int l = 0; l < levels; ++l) {
        compute_gradients(fixed_pyr[static_cast<size_t>(l)]);
        compute_gradients(moving_pyr[static_cast<size_t>(l)]);
    }

    Homography warp_full = from_params(init);
    RegistrationResult result;
    int total_iterations = 0;
    bool diverged = false;

    for (int level = levels - 1; level >= 0; --level) {
        const Level& tpl = fixed_pyr[static_cast<size_t>(level)];
        const Level& mov = moving_pyr[static_cast<size_t>(level)];
        const Homography lift = level_to_full(level);
        const Homography drop = invert(lift);
        const Homography norm = normalizer(tpl.width, tpl.height);
        const Homography denorm = invert(norm);
        const double q = norm.m[0];

        std::vector<TemplateSample> samples;
        samples.reserve(tpl.intensity.size());
        for (int y = 1; y + 1 < tpl.height; ++y) {
            for (int x = 1; x + 1 < tpl.width; ++x) {
                const size_t idx = static_cast<size_t>(y) * tpl.width + x;
                if (!tpl.grad_valid[idx]) continue;
                TemplateSample s;
                const Vec2 n = norm.apply({static_cast<double>(x), static_cast<double>(y)});
                s.xn = n.x;
                s.yn = n.y;
                s.px = x;
                s.py = y;
                s.value = tpl.intensity[idx];
                s.gx = tpl.gx[idx];
                s.gy = tpl.gy[idx];
                s.variance = tpl.variance[idx];
                samples.push_back(s);
            }
        }
        if (samples.size() < 32)
            raise(ErrorKind::overlap, "register: not enough valid pixels at pyramid level");

        // current estimate in this level's normalized coordinates
        Homography warp_norm = compose(norm, compose(drop, compose(warp_full, compose(lift, denorm))));

        double prev_objective = std::numeric_limits<double>::infinity();
        int rising = 0;

        for (int iter = 0; iter < opts.max_iterations; ++iter) {
            const Homography warp_level = compose(denorm, compose(warp_norm, norm));
            Eigen::Matrix<double, 8, 8> hessian = Eigen::Matrix<double, 8, 8>::Zero();
            Eigen::Matrix<double, 8, 1> rhs = Eigen::Matrix<double, 8, 1>::Zero();
            double err_sq = 0.0;
            double objective = 0.0;
            size_t used = 0;

            for (const TemplateSample& s : samples) {
                const Vec2 mapped = warp_level.apply({s.px, s.py});
                const MovingSample ms = sample_moving(mov, mapped.x, mapped.y);
                if (!ms.valid) continue;
                const double e = ms.value - s.value;
                // Inverse-variance weighting with the interpolation noise
                // gain folded in keeps the expected loss independent of the
                // warp's sub-pixel phase, so the floor cannot attract the fit.
                const double wgt = 1.0 / std::max(s.variance + ms.variance, 1e-12);
                err_sq += e * e;
                objective += wgt * e * e;
                ++used;

                // symmetric (template + warped moving) gradient: with equal
                // noise statistics on both images the noise-gradient term in
                // the normal equations cancels instead of biasing the update
                const double gx = 0.5 * (s.gx + ms.gx) / q;
                const double gy = 0.5 * (s.gy + ms.gy) / q;
                const double proj = gx * s.xn + gy * s.yn;
                const double g[8] = {gx * s.xn, gy * s.xn, gx * s.yn, gy * s.yn,
                                     gx,        gy,        -proj * s.xn, -proj * s.yn};
                for (int r = 0; r < 8; ++r) {
                    rhs(r) += wgt * g[r] * e;
                    for (int c = r; c < 8; ++c) hessian(r, c) += wgt * g[r] * g[c];
                }
            }
            if (used < 32) raise(ErrorKind::overlap, "register: valid overlap vanished");
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < r; ++c) hessian(r, c) = hessian(c, r);

            objective /= static_cast<double>(used);
            if (level == 0) {
                result.residual = std::sqrt(err_sq / static_cast<double>(used));
                // material increases only; drift below 0.1% is noise, not
                // divergence
                if (objective > prev_objective * 1.001) {
                    if (++rising >= 5) {
                        diverged = true;
                        break;
                    }
                } else {
                    rising = 0;
                }
                prev_objective = objective;
            }

            const double damping = 1e-4 * hessian.trace() / 8.0;
            hessian.diagonal().array() += damping;
            const Eigen::Matrix<double, 8, 1> delta = hessian.ldlt().solve(rhs);
            if (!delta.allFinite()) {
                diverged = true;
                break;
            }

            WarpParams dp;
            for (int i = 0; i < 8; ++i) dp.p[static_cast<size_t>(i)] = delta(i);
            warp_norm = compose(warp_norm, invert(from_params(dp)));
            ++total_iterations;
            if (delta.norm() < opts.tolerance) break;
        }

        warp_full = compose(lift, compose(denorm, compose(warp_norm, compose(norm, drop))));
        if (diverged) break;
    }

    result.warp = to_params(warp_full);
    result.iterations_used = total_iterations;
    result.converged = !diverged;
    return result;
}

RegisterBackend& backend_slot() {
    static RegisterBackend backend;
    return backend;
}

}  // namespace

void set_register_backend(RegisterBackend backend) { backend_slot() = std::move(backend); }

RegistrationResult register_images(const LinearImage& moving, const LinearImage& fixed,
                                   const WarpParams& init, const RegisterOptions& opts) {
    if (backend_slot()) return backend_slot()(moving, fixed, init, opts);
    return register_photometric(moving, fixed, init, opts);
}

double corner_displacement(const WarpParams& a, const WarpParams& b, int width, int height) {
    const Homography ha = from_params(a);
    const Homography hb = from_params(b);
    const Vec2 corners[4] = {{0.0, 0.0},
                             {static_cast<double>(width - 1), 0.0},
                             {0.0, static_cast<double>(height - 1)},
                             {static_cast<double>(width - 1), static_cast<double>(height - 1)}};
    double sum_sq = 0.0;
    for (const Vec2& c : corners) {
        const Vec2 pa = ha.apply(c);
        const Vec2 pb = hb.apply(c);
        const double dx = pa.x - pb.x;
        const double dy = pa.y - pb.y;
        sum_sq += dx * dx + dy * dy;
    }
    return std::sqrt(sum_sq / 4.0);
}

}  // namespace photonpano
