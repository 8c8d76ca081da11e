#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "photonpano/photon_cube.hpp"
#include "photonpano/registration.hpp"
#include "photonpano/trajectory.hpp"

namespace photonpano {

// Contiguous run of binary frames merged into one virtual exposure. The
// reference frame is the time instant the merged image is localized to; it
// sits at the group center except for boundary groups.
struct Group {
    int64_t start = 0;
    int64_t length = 0;
    int64_t ref = 0;
};

struct PipelineConfig {
    int64_t group_size = 500;  // m
    int max_iterations = 5;
    double convergence_epsilon = 0.5;            // px, max knot corner shift between iterations
    std::vector<double> scale_schedule;          // per-iteration merge scale, empty = all 1.0
    bool add_boundary_groups = true;             // from iteration 2
    RegisterOptions register_options;
    std::filesystem::path dump_dir;  // when set, merged frames + manifest land here
};

struct GroupDiagnostics {
    int64_t ref = 0;
    double residual = 0.0;
    bool converged = false;
    bool flagged = false;  // excluded from the fit this iteration
};

struct IterationDiagnostics {
    int iteration = 0;
    int64_t registrations = 0;
    double merge_scale = 1.0;
    double max_knot_shift = 0.0;  // px, vs. previous trajectory
    std::vector<GroupDiagnostics> groups;
};

struct PipelineDiagnostics {
    std::vector<IterationDiagnostics> iterations;
    bool converged = false;
    std::string warning;
};

struct PipelineState {
    const PhotonCube* cube = nullptr;
    Trajectory trajectory;
    int iteration = 0;
    std::vector<Group> groups;  // sorted by ref
    PipelineDiagnostics diagnostics;
};

// Stratified grouping schedule. Iteration 1 splits the n frames into
// floor(n/m) non-overlapping center-referenced groups. Later iterations keep
// every prior group and fill in groups referenced at the midpoints between
// the iteration-1 references, plus the two boundary groups (refs 0 and n-1)
// when enabled; positions that already exist are not duplicated. This caps
// the group count at 2*floor(n/m) + 1 and with it the per-iteration
// registration work.
std::vector<Group> make_groups(int64_t num_frames, int64_t group_size, int iteration,
                               const std::vector<Group>& prior_groups,
                               bool add_boundary_groups = true);

// Warps every frame of the group into the reference frame's coordinates
// using the current trajectory (the reference itself is pre-warped by the
// identity) and pools the binary samples into one flux estimate. scale > 1
// merges onto an upsampled canvas.
LinearImage merge_group(const PhotonCube& cube, const Group& group, const Trajectory& traj,
                        double scale = 1.0);

// Registers consecutive merged frames after compensating each pair by the
// prior trajectory's relative warp, then chains the residuals into absolute
// warp knots anchored to the identity at the first reference. Nonconverged
// pairs keep the prior motion and come back flagged.
std::vector<Knot> locate(const std::vector<LinearImage>& merged, const std::vector<Group>& groups,
                         const Trajectory& traj_prev, double scale, const RegisterOptions& opts,
                         std::vector<GroupDiagnostics>& diagnostics);

PipelineState make_initial_state(const PhotonCube& cube);

// One Re-sample -> Merge -> Locate -> Interpolate pass.
void run_iteration(PipelineState& state, const PipelineConfig& cfg);

// Iterates until the maximum knot corner displacement between successive
// trajectories drops below convergence_epsilon or max_iterations is reached.
std::pair<Trajectory, PipelineDiagnostics> run(const PhotonCube& cube, const PipelineConfig& cfg);

}  // namespace photonpano
