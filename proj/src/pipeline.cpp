#include "photonpano/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "photonpano/image_io.hpp"
#include "photonpano/parallel.hpp"

namespace photonpano {

std::vector<Group> make_groups(int64_t num_frames, int64_t group_size, int iteration,
                               const std::vector<Group>& prior_groups, bool add_boundary_groups) {
    if (group_size > num_frames)
        raise(ErrorKind::argument, "group size exceeds the number of frames");
    if (group_size < 1) raise(ErrorKind::argument, "group size must be >= 1");

    const int64_t count = num_frames / group_size;

    if (iteration <= 1) {
        std::vector<Group> groups;
        groups.reserve(static_cast<size_t>(count));
        for (int64_t i = 0; i < count; ++i)
            groups.push_back(Group{i * group_size, group_size, i * group_size + group_size / 2});
        return groups;
    }

    std::vector<Group> groups = prior_groups;
    std::set<int64_t> refs;
    for (const Group& g : groups) refs.insert(g.ref);

    auto add_ref = [&](int64_t ref) {
        if (!refs.insert(ref).second) return;
        const int64_t start = std::clamp<int64_t>(ref - group_size / 2, 0, num_frames - group_size);
        groups.push_back(Group{start, group_size, ref});
    };

    // midpoints of the iteration-1 reference grid
    for (int64_t i = 1; i < count; ++i) {
        const int64_t prev_ref = (i - 1) * group_size + group_size / 2;
        const int64_t next_ref = i * group_size + group_size / 2;
        add_ref((prev_ref + next_ref) / 2);
    }
    if (add_boundary_groups) {
        add_ref(0);
        add_ref(num_frames - 1);
    }

    std::sort(groups.begin(), groups.end(),
              [](const Group& a, const Group& b) { return a.ref < b.ref; });
    return groups;
}

LinearImage merge_group(const PhotonCube& cube, const Group& group, const Trajectory& traj,
                        double scale) {
    if (group.start < 0 || group.length < 1 || group.start + group.length > cube.num_frames())
        raise(ErrorKind::argument, "merge_group: group outside the cube");
    if (group.ref < group.start || group.ref >= group.start + group.length)
        raise(ErrorKind::argument, "merge_group: reference outside the group");

    const int out_w = static_cast<int>(std::lround(cube.width() * scale));
    const int out_h = static_cast<int>(std::lround(cube.height() * scale));
    Image sum(out_w, out_h, 0.0);
    Image weight(out_w, out_h, 0.0);
    Image frame(cube.width(), cube.height());

    for (int64_t i = group.start; i < group.start + group.length; ++i) {
        Homography local = traj.relative_warp(static_cast<double>(group.ref), static_cast<double>(i));
        if (scale != 1.0) local = compose(scaling(scale), local);  // native frame, upsampled canvas
        cube.decode_frame(i, frame);
        accumulate_warp(frame, local, sum, weight);
    }

    bool any = false;
    for (double w : weight.pixels)
        if (w > 0.0) {
            any = true;
            break;
        }
    if (!any) raise(ErrorKind::pipeline, "merge_group: empty merge (no in-bounds samples)");

    Image fraction(out_w, out_h, 0.0);
    for (size_t i = 0; i < fraction.pixels.size(); ++i)
        if (weight.pixels[i] > 0.0) fraction.pixels[i] = sum.pixels[i] / weight.pixels[i];
    return mle_flux(fraction, cube.tau(), weight);
}

std::vector<Knot> locate(const std::vector<LinearImage>& merged, const std::vector<Group>& groups,
                         const Trajectory& traj_prev, double scale, const RegisterOptions& opts,
                         std::vector<GroupDiagnostics>& diagnostics) {
    if (merged.size() < 2) raise(ErrorKind::argument, "locate needs at least two merged images");
    if (merged.size() != groups.size())
        raise(ErrorKind::argument, "locate: one merged image per group required");

    const size_t pairs = merged.size() - 1;
    std::vector<RegistrationResult> results(pairs);
    std::vector<bool> failed(pairs, false);

    parallel::for_each_index(static_cast<int64_t>(pairs), [&](int64_t idx) {
        const size_t g = static_cast<size_t>(idx) + 1;
        const double t_prev = static_cast<double>(groups[g - 1].ref);
        const double t_cur = static_cast<double>(groups[g].ref);
        Homography prior_rel = traj_prev.relative_warp(t_prev, t_cur);
        if (scale != 1.0) prior_rel = scale_warp(prior_rel, scale);
        try {
            // Previous merged frame resampled into the current reference's
            // coordinates; the registration then measures only the residual.
            const WarpedImage comp_raw = apply_warp(merged[g - 1], invert(prior_rel),
                                                    merged[g].width, merged[g].height);
            LinearImage comp(merged[g].width, merged[g].height);
            comp.values = comp_raw.values.pixels;
            comp.weights = comp_raw.weights.pixels;
            results[idx] = register_images(comp, merged[g], WarpParams{}, opts);
        } catch (const Error&) {
            failed[idx] = true;
        }
    });

    std::vector<Knot> knots;
    knots.reserve(groups.size());
    diagnostics.assign(groups.size(), GroupDiagnostics{});

    Homography absolute = Homography::identity();
    knots.push_back(Knot{static_cast<double>(groups[0].ref), to_params(absolute), 0.0});
    diagnostics[0] = GroupDiagnostics{groups[0].ref, 0.0, true, false};

    for (size_t g = 1; g < groups.size(); ++g) {
        const double t_prev = static_cast<double>(groups[g - 1].ref);
        const double t_cur = static_cast<double>(groups[g].ref);
        const Homography prior_rel = traj_prev.relative_warp(t_prev, t_cur);

        const RegistrationResult& res = results[g - 1];
        const bool ok = !failed[g - 1] && res.converged;
        Homography residual = Homography::identity();
        if (ok) residual = scale != 1.0 ? scale_warp(from_params(res.warp), 1.0 / scale)
                                        : from_params(res.warp);

        absolute = compose(absolute, compose(prior_rel, residual));
        knots.push_back(Knot{t_cur, to_params(absolute), res.residual});
        diagnostics[g] = GroupDiagnostics{groups[g].ref, res.residual, ok, !ok};
    }
    return knots;
}

PipelineState make_initial_state(const PhotonCube& cube) {
    PipelineState state;
    state.cube = &cube;
    state.trajectory = Trajectory::identity(0.0, static_cast<double>(cube.num_frames() - 1));
    return state;
}

namespace {

void dump_merged(const PipelineConfig& cfg, int iteration,
                 const std::vector<Group>& groups, const std::vector<LinearImage>& merged,
                 const std::vector<GroupDiagnostics>& diag) {
    std::filesystem::create_directories(cfg.dump_dir);
    std::ofstream manifest(cfg.dump_dir / "manifest.txt", std::ios::app);
    for (size_t g = 0; g < groups.size(); ++g) {
        double peak = 0.0;
        for (size_t i = 0; i < merged[g].size(); ++i)
            if (merged[g].weights[i] > 0.0) peak = std::max(peak, merged[g].values[i]);
        Image8 preview(merged[g].width, merged[g].height);
        for (size_t i = 0; i < merged[g].size(); ++i)
            preview.pixels[i] = peak > 0.0
                                    ? static_cast<uint8_t>(std::lround(
                                          255.0 * std::clamp(merged[g].values[i] / peak, 0.0, 1.0)))
                                    : 0;
        const std::string name =
            "iter" + std::to_string(iteration) + "_ref" + std::to_string(groups[g].ref) + ".pgm";
        write_pgm(cfg.dump_dir / name, preview);
        manifest << iteration << " " << groups[g].ref << " " << diag[g].residual << "\n";
    }
}

}  // namespace

void run_iteration(PipelineState& state, const PipelineConfig& cfg) {
    const PhotonCube& cube = *state.cube;
    const int iteration = state.iteration + 1;

    state.groups = make_groups(cube.num_frames(), cfg.group_size, iteration, state.groups,
                               cfg.add_boundary_groups);
    const double scale =
        cfg.scale_schedule.empty()
            ? 1.0
            : cfg.scale_schedule[std::min<size_t>(static_cast<size_t>(iteration) - 1,
                                                  cfg.scale_schedule.size() - 1)];

    std::vector<LinearImage> merged(state.groups.size());
    parallel::for_each_index(static_cast<int64_t>(state.groups.size()), [&](int64_t g) {
        merged[static_cast<size_t>(g)] =
            merge_group(cube, state.groups[static_cast<size_t>(g)], state.trajectory, scale);
    });

    IterationDiagnostics iter_diag;
    iter_diag.iteration = iteration;
    iter_diag.merge_scale = scale;
    iter_diag.registrations = static_cast<int64_t>(state.groups.size()) - 1;

    RegisterOptions reg_opts = cfg.register_options;
    if (reg_opts.tau == 0.0) reg_opts.tau = cube.tau();  // enable the photon-noise model

    std::vector<Knot> knots =
        locate(merged, state.groups, state.trajectory, scale, reg_opts, iter_diag.groups);

    if (!cfg.dump_dir.empty()) dump_merged(cfg, iteration, state.groups, merged, iter_diag.groups);

    size_t flagged = 0;
    std::vector<Knot> usable;
    usable.reserve(knots.size());
    for (size_t g = 0; g < knots.size(); ++g) {
        if (iter_diag.groups[g].flagged)
            ++flagged;
        else
            usable.push_back(knots[g]);
    }
    if (flagged * 2 > knots.size())
        raise(ErrorKind::pipeline, "pipeline: more than half of the registrations failed (" +
                                       std::to_string(flagged) + "/" + std::to_string(knots.size()) +
                                       ")");
    if (usable.size() < 2)
        raise(ErrorKind::pipeline, "pipeline: not enough usable knots to fit a trajectory");

    Trajectory next = Trajectory::fit(std::move(usable));

    // knot shift vs. the previous trajectory, both anchored at the new origin
    const double t0 = next.knots().front().t;
    const Trajectory prev_anchored = state.trajectory.re_anchored(t0);
    double max_shift = 0.0;
    for (const Knot& k : next.knots())
        max_shift = std::max(max_shift, corner_displacement(k.params, prev_anchored.eval(k.t),
                                                            cube.width(), cube.height()));
    iter_diag.max_knot_shift = max_shift;

    state.trajectory = std::move(next);
    state.iteration = iteration;
    state.diagnostics.iterations.push_back(std::move(iter_diag));
}

std::pair<Trajectory, PipelineDiagnostics> run(const PhotonCube& cube, const PipelineConfig& cfg) {
    if (cfg.group_size < 2) raise(ErrorKind::argument, "group size must be >= 2");
    if (cfg.group_size > cube.num_frames())
        raise(ErrorKind::argument, "group size exceeds the number of frames");
    if (cfg.max_iterations < 1) raise(ErrorKind::argument, "max_iterations must be >= 1");

    PipelineState state = make_initial_state(cube);

    if (cube.num_frames() / cfg.group_size < 2) {
        state.diagnostics.warning =
            "fewer than two groups fit the sequence; returning the identity trajectory";
        state.diagnostics.converged = false;
        return {state.trajectory, state.diagnostics};
    }

    for (int k = 0; k < cfg.max_iterations; ++k) {
        run_iteration(state, cfg);
        if (state.diagnostics.iterations.back().max_knot_shift < cfg.convergence_epsilon) {
            state.diagnostics.converged = true;
            break;
        }
    }
    return {state.trajectory, state.diagnostics};
}

}  // namespace photonpano
