#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "photonpano/config.hpp"
#include "photonpano/image.hpp"
#include "photonpano/photon_cube.hpp"
#include "photonpano/trajectory.hpp"

namespace photonpano {

// Camera path used to drive the simulation. Control points are (t, params)
// pairs; linear_pan interpolates linearly between its two endpoints while
// spline_path runs the same cubic interpolation the estimator uses. Every
// induced warp must keep the field of view inside the panorama.
struct TrajectorySpec {
    enum class Kind { linear_pan, spline_path };
    Kind kind = Kind::linear_pan;
    std::vector<Knot> control_points;

    Trajectory to_trajectory(int64_t num_frames) const;
};

struct SimConfig {
    std::filesystem::path panorama_path;
    int fov_width = 0;
    int fov_height = 0;
    int64_t num_frames = 0;
    double tau = 0.0;
    double flux_at_white = 0.0;  // photons/second at linear intensity 1.0
    TrajectorySpec trajectory;
    uint64_t seed = 0;
    double read_noise_sigma = 0.0;      // electrons, RGB baseline only
    int64_t rgb_exposure_frames = 0;    // RGB baseline only

    // Flat key = value file; unknown keys are errors. Relative panorama
    // paths resolve against the config file's directory.
    static SimConfig from_file(const std::filesystem::path& path);
    static SimConfig from_config(FlatConfig& cfg, const std::filesystem::path& base_dir);
};

// Ground-truth panorama as linear intensity in [0, 1]: 8-bit grayscale or
// sRGB PNG/PGM, linearized and reduced to Rec. 709 luminance.
Image load_panorama(const std::filesystem::path& path);

// sRGB transfer applied to whole 8-bit rasters.
Image srgb_to_linear_image(const Image8& codes);
Image8 linear_to_srgb_image(const Image& linear);

// One binary frame: each FOV pixel samples the scene through w (bilinear),
// turning intensity into flux via flux_at_white, and fires with probability
// 1 - exp(-flux * tau). Draws come from a counter generator keyed by
// (seed, frame index, pixel index), so any frame can be produced
// independently and reproducibly.
void sample_binary_frame(const Image& scene, const Homography& w, const SimConfig& cfg,
                         int64_t frame_index, PhotonCube& out);
Image sample_binary_frame(const Image& scene, const Homography& w, const SimConfig& cfg,
                          int64_t frame_index);

// Full sequence along the interpolated trajectory spec. Bit-reproducible
// for a given seed regardless of worker count.
std::pair<PhotonCube, Trajectory> simulate_sequence(const SimConfig& cfg);
std::pair<PhotonCube, Trajectory> simulate_sequence(const SimConfig& cfg, const Image& scene);

// Conventional-camera baseline: ground-truth intensities averaged over the
// window (8x temporal supersampling), plus additive Gaussian read noise with
// sigma = read_noise_sigma / (flux_at_white * window duration), clamped at
// zero. Values are scaled to flux units; weights are 1.
LinearImage simulate_rgb(const Image& scene, const Trajectory& traj, int64_t window_start,
                         int64_t window_length, const SimConfig& cfg);

}  // namespace photonpano
