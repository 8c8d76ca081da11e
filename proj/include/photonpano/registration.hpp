#pragma once

#include <functional>

#include "photonpano/image.hpp"
#include "photonpano/warp.hpp"

namespace photonpano {

struct RegisterOptions {
    int pyramid_levels = 0;    // 0 = auto: floor(log2(min_dim / 32)) + 1
    int max_iterations = 50;   // per pyramid level
    double tolerance = 1e-6;   // parameter update norm stop (centered unit coords)

    // Per-binary-frame exposure behind the flux estimates. When set, the
    // photon-noise variance model weights each pixel of the loss; with 0 the
    // weighting falls back to the sample counts alone.
    double tau = 0.0;
};

struct RegistrationResult {
    // Warp contract: fixed(x) ~= moving(A(x)) with A = from_params(warp),
    // i.e. A carries fixed-image pixel coordinates to the matching moving-
    // image sample position.
    WarpParams warp;
    double residual = 0.0;  // RMS log-intensity error over the valid overlap
    bool converged = false;
    int iterations_used = 0;
};

// Pairwise homography estimation between two same-size flux images.
// The default backend is coarse-to-fine inverse-compositional Gauss-Newton
// on the eight warp parameters, run on log-tonemapped intensities with
// pixels of weight < 0.5 in either image excluded. Deterministic.
RegistrationResult register_images(const LinearImage& moving, const LinearImage& fixed,
                                   const WarpParams& init = {}, const RegisterOptions& opts = {});

// Backend plug point. An alternative estimator (e.g. feature matching +
// robust fit) can replace the default behind the same contract. Passing an
// empty function restores the built-in backend. Not thread-safe; intended
// for startup configuration.
using RegisterBackend = std::function<RegistrationResult(
    const LinearImage& moving, const LinearImage& fixed, const WarpParams& init,
    const RegisterOptions& opts)>;
void set_register_backend(RegisterBackend backend);

// RMS displacement of the four image corners between two warps, in pixels.
double corner_displacement(const WarpParams& a, const WarpParams& b, int width, int height);

}  // namespace photonpano
