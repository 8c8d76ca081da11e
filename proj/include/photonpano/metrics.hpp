#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "photonpano/image.hpp"
#include "photonpano/trajectory.hpp"

namespace photonpano {

struct Metrics {
    double corner_rmse_px = -1.0;  // negative = not computed
    double psnr_db = -1.0;
    double coverage_fraction = -1.0;
    std::vector<int64_t> registrations_per_iteration;
    double wall_time_s = -1.0;
    int iterations = 0;
    bool converged = false;

    std::vector<std::pair<std::string, std::string>> to_entries() const;
};

// Corner RMSE between two trajectories over the union of their knot times
// within the common range, after re-anchoring both to the identity at the
// first common time (absolute pose is unobservable). Disjoint time ranges
// are an evaluation error.
double trajectory_corner_rmse(const Trajectory& a, const Trajectory& b, int fov_width,
                              int fov_height);

// PSNR between reconstruction and reference over pixels valid in both
// (recon weight > 0 and mask > 0), with the given peak signal level.
// Returns the PSNR; coverage_out (if non-null) receives the fraction of
// reference pixels that are covered.
double psnr_over_coverage(const LinearImage& recon, const Image& reference, double peak,
                          double* coverage_out = nullptr);

}  // namespace photonpano
