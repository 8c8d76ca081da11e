#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "photonpano/config.hpp"
#include "photonpano/error.hpp"
#include "photonpano/image_io.hpp"
#include "photonpano/metrics.hpp"
#include "photonpano/photon_cube.hpp"
#include "photonpano/pipeline.hpp"
#include "photonpano/render.hpp"
#include "photonpano/simulator.hpp"
#include "photonpano/trajectory.hpp"

namespace fs = std::filesystem;
using namespace photonpano;

namespace {

int cmd_simulate(const std::string& config_path, std::string out_cube, std::string out_csv) {
    const SimConfig cfg = SimConfig::from_file(config_path);
    if (out_cube.empty()) out_cube = fs::path(config_path).stem().string() + ".pcube";
    if (out_csv.empty()) out_csv = fs::path(config_path).stem().string() + "_truth.csv";

    auto [cube, truth] = simulate_sequence(cfg);
    write_pcube(cube, fs::path(out_cube));
    truth.to_csv(fs::path(out_csv));
    std::cout << "wrote " << out_cube << " (" << cube.num_frames() << " frames "
              << cube.width() << "x" << cube.height() << ") and " << out_csv << "\n";
    return 0;
}

int cmd_reconstruct(const std::string& cube_path, int64_t group_size, int iterations,
                    double epsilon, double scale, int64_t stride, const std::string& out_dir,
                    bool dump_intermediates) {
    const auto t_start = std::chrono::steady_clock::now();
    const PhotonCube cube = read_pcube(fs::path(cube_path));

    PipelineConfig cfg;
    cfg.group_size = group_size;
    cfg.max_iterations = iterations;
    cfg.convergence_epsilon = epsilon;
    fs::create_directories(out_dir);
    if (dump_intermediates) cfg.dump_dir = fs::path(out_dir) / "intermediates";

    auto [traj, diag] = run(cube, cfg);
    if (!diag.warning.empty()) std::cerr << "warning: " << diag.warning << "\n";

    AssembleConfig render_cfg;
    render_cfg.scale = scale;
    render_cfg.frame_stride = stride;
    const PanoramaCanvas canvas = assemble(cube, traj, render_cfg);
    const LinearImage flux = resolve_flux(canvas, cube.tau(), render_cfg.weight_min);

    const Tonemapped tm = tonemap(flux, default_exposure(flux));
    write_png8(fs::path(out_dir) / "panorama.png", tm.image);
    write_pgm(fs::path(out_dir) / "panorama.pgm", tm.image);
    write_pgm(fs::path(out_dir) / "validity.pgm", tm.validity);
    write_flux_png16(fs::path(out_dir) / "panorama_hdr16.png", flux);
    write_flux_dump(fs::path(out_dir) / "panorama.flux", flux);
    traj.to_csv(fs::path(out_dir) / "trajectory.csv");

    Metrics metrics;
    metrics.coverage_fraction = flux.valid_fraction();
    for (const auto& it : diag.iterations)
        metrics.registrations_per_iteration.push_back(it.registrations);
    metrics.iterations = static_cast<int>(diag.iterations.size());
    metrics.converged = diag.converged;
    metrics.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    auto entries = metrics.to_entries();
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    entries.emplace_back("origin_x", num(canvas.origin_offset.x));
    entries.emplace_back("origin_y", num(canvas.origin_offset.y));
    entries.emplace_back("scale", num(canvas.scale));
    write_flat_file(fs::path(out_dir) / "metrics.txt", entries);

    std::cout << "wrote panorama and metrics to " << out_dir << " ("
              << metrics.iterations << " iterations, "
              << (diag.converged ? "converged" : "not converged") << ")\n";
    return 0;
}

int cmd_evaluate(const std::string& estimated_csv, const std::string& truth_csv, int fov_width,
                 int fov_height, const std::string& flux_path, const std::string& panorama_path,
                 double origin_x, double origin_y, double recon_scale, double flux_at_white,
                 const std::string& out_path) {
    const Trajectory estimated = Trajectory::from_csv(fs::path(estimated_csv));
    const Trajectory truth = Trajectory::from_csv(fs::path(truth_csv));

    Metrics metrics;
    metrics.corner_rmse_px = trajectory_corner_rmse(estimated, truth, fov_width, fov_height);

    if (!flux_path.empty()) {
        if (panorama_path.empty())
            raise(ErrorKind::argument, "evaluate: --panorama is required with --flux");
        if (!(flux_at_white > 0.0))
            raise(ErrorKind::argument, "evaluate: --flux-at-white is required with --flux");
        LinearImage recon = read_flux_dump(fs::path(flux_path));
        for (double& v : recon.values) v /= flux_at_white;

        // ground truth resampled into the reconstruction's canvas frame:
        // canvas pixel x sits at frame coordinates (x + origin)/s of the
        // anchor frame, which the truth warp carries into the panorama.
        const Image pano = load_panorama(fs::path(panorama_path));
        const double anchor_t = std::max(estimated.knots().front().t, truth.knots().front().t);
        const Homography to_pano = truth.warp_at(anchor_t);
        Image reference(recon.width, recon.height, 0.0);
        for (int y = 0; y < recon.height; ++y)
            for (int x = 0; x < recon.width; ++x) {
                const Vec2 frame_pt{(x + origin_x) / recon_scale, (y + origin_y) / recon_scale};
                const Vec2 p = to_pano.apply(frame_pt);
                if (p.x < 0 || p.y < 0 || p.x > pano.width - 1 || p.y > pano.height - 1) {
                    recon.weights[static_cast<size_t>(y) * recon.width + x] = 0.0;
                    continue;
                }
                const int x0 = std::min(static_cast<int>(p.x), pano.width - 2);
                const int y0 = std::min(static_cast<int>(p.y), pano.height - 2);
                const double fx = p.x - x0, fy = p.y - y0;
                reference.at(x, y) = (1 - fx) * (1 - fy) * pano.at(x0, y0) +
                                     fx * (1 - fy) * pano.at(x0 + 1, y0) +
                                     (1 - fx) * fy * pano.at(x0, y0 + 1) +
                                     fx * fy * pano.at(x0 + 1, y0 + 1);
            }
        double coverage = 0.0;
        metrics.psnr_db = psnr_over_coverage(recon, reference, 1.0, &coverage);
        metrics.coverage_fraction = coverage;
    }

    const auto entries = metrics.to_entries();
    if (out_path.empty())
        std::cout << format_flat(entries);
    else
        write_flat_file(fs::path(out_path), entries);
    return 0;
}

int cmd_info(const std::string& cube_path) {
    const PhotonCube cube = read_pcube(fs::path(cube_path));
    std::cout << "width = " << cube.width() << "\n"
              << "height = " << cube.height() << "\n"
              << "num_frames = " << cube.num_frames() << "\n"
              << "tau = " << cube.tau() << "\n"
              << "frame_bytes = " << cube.frame_bytes() << "\n"
              << "data_bytes = " << cube.data().size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Panorama and motion reconstruction from single-photon binary frame streams"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config, sim_out_cube, sim_out_csv;
    auto* sim = app.add_subcommand("simulate", "Generate a photon cube from a config file");
    sim->add_option("config", sim_config, "flat key = value config file")->required();
    sim->add_option("--out-cube", sim_out_cube, "output .pcube path");
    sim->add_option("--out-trajectory", sim_out_csv, "output ground-truth CSV path");

    // reconstruct
    std::string rec_cube, rec_out = "reconstruction";
    int64_t rec_group = 500, rec_stride = 1;
    int rec_iters = 5;
    double rec_eps = 0.5, rec_scale = 1.0;
    bool rec_dump = false;
    auto* rec = app.add_subcommand("reconstruct", "Estimate motion and assemble the panorama");
    rec->add_option("cube", rec_cube, ".pcube input")->required();
    rec->add_option("--group-size", rec_group, "frames per group (m)");
    rec->add_option("--iterations", rec_iters, "maximum refinement iterations");
    rec->add_option("--epsilon", rec_eps, "convergence threshold in pixels");
    rec->add_option("--scale", rec_scale, "super-resolution factor for rendering");
    rec->add_option("--stride", rec_stride, "frame stride for rendering");
    rec->add_option("--out", rec_out, "output directory");
    rec->add_flag("--dump-intermediates", rec_dump, "write merged frames and a manifest");

    // evaluate
    std::string ev_est, ev_truth, ev_flux, ev_pano, ev_out;
    int ev_fw = 0, ev_fh = 0;
    double ev_ox = 0.0, ev_oy = 0.0, ev_scale = 1.0, ev_white = 0.0;
    auto* ev = app.add_subcommand("evaluate", "Compare an estimated trajectory to ground truth");
    ev->add_option("estimated", ev_est, "estimated trajectory CSV")->required();
    ev->add_option("truth", ev_truth, "ground-truth trajectory CSV")->required();
    ev->add_option("--fov-width", ev_fw, "sensor width in pixels")->required();
    ev->add_option("--fov-height", ev_fh, "sensor height in pixels")->required();
    ev->add_option("--flux", ev_flux, "reconstruction flux dump for PSNR");
    ev->add_option("--panorama", ev_pano, "ground-truth panorama for PSNR");
    ev->add_option("--origin-x", ev_ox, "canvas origin x (from reconstruct metrics)");
    ev->add_option("--origin-y", ev_oy, "canvas origin y (from reconstruct metrics)");
    ev->add_option("--recon-scale", ev_scale, "canvas scale (from reconstruct metrics)");
    ev->add_option("--flux-at-white", ev_white, "flux mapped to intensity 1.0");
    ev->add_option("--out", ev_out, "metrics output path (default: stdout)");

    // info
    std::string info_cube;
    auto* info = app.add_subcommand("info", "Print a photon cube header");
    info->add_option("cube", info_cube, ".pcube input")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_config, sim_out_cube, sim_out_csv);
        if (rec->parsed())
            return cmd_reconstruct(rec_cube, rec_group, rec_iters, rec_eps, rec_scale, rec_stride,
                                   rec_out, rec_dump);
        if (ev->parsed())
            return cmd_evaluate(ev_est, ev_truth, ev_fw, ev_fh, ev_flux, ev_pano, ev_ox, ev_oy,
                                ev_scale, ev_white, ev_out);
        if (info->parsed()) return cmd_info(info_cube);
    } catch (const Error& e) {
        std::cerr << "error[" << error_kind_name(e.kind()) << "]: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
