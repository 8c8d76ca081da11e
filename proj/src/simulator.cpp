#include "photonpano/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "photonpano/color.hpp"
#include "photonpano/image_io.hpp"
#include "photonpano/parallel.hpp"
#include "photonpano/rng.hpp"

namespace photonpano {

namespace {
constexpr uint64_t kRgbStreamTag = 0x5247422173696d75ull;  // decorrelates RGB noise draws
}

Trajectory TrajectorySpec::to_trajectory(int64_t num_frames) const {
    std::vector<Knot> knots = control_points;
    if (knots.empty()) {
        knots.push_back(Knot{0.0, WarpParams{}, 0.0});
        knots.push_back(Knot{std::max(1.0, static_cast<double>(num_frames - 1)), WarpParams{}, 0.0});
    }
    if (knots.size() == 1) {
        Knot second = knots.front();
        second.t = knots.front().t + std::max<double>(1.0, static_cast<double>(num_frames - 1));
        knots.push_back(second);
    }
    if (kind == Kind::linear_pan && knots.size() > 2)
        raise(ErrorKind::config, "linear_pan takes exactly two control points");
    return Trajectory::fit(std::move(knots));
}

SimConfig SimConfig::from_config(FlatConfig& cfg, const std::filesystem::path& base_dir) {
    SimConfig sim;
    std::filesystem::path pano = cfg.require_string("panorama");
    sim.panorama_path = pano.is_absolute() ? pano : base_dir / pano;
    sim.fov_width = static_cast<int>(cfg.require_int("fov_width"));
    sim.fov_height = static_cast<int>(cfg.require_int("fov_height"));
    sim.num_frames = cfg.require_int("num_frames");
    sim.tau = cfg.require_double("tau");
    sim.flux_at_white = cfg.require_double("flux_at_white");
    sim.seed = static_cast<uint64_t>(cfg.get_int("seed", 0));
    sim.read_noise_sigma = cfg.get_double("read_noise_sigma", 0.0);
    sim.rgb_exposure_frames = cfg.get_int("rgb_exposure_frames", 0);

    const std::string kind = cfg.get_string("trajectory_kind", "linear_pan");
    if (kind == "linear_pan")
        sim.trajectory.kind = TrajectorySpec::Kind::linear_pan;
    else if (kind == "spline_path")
        sim.trajectory.kind = TrajectorySpec::Kind::spline_path;
    else
        raise(ErrorKind::config, "trajectory_kind must be linear_pan or spline_path, got '" +
                                     kind + "'");

    for (const std::string& row : cfg.consume_indexed("knot.")) {
        std::istringstream in(row);
        Knot k;
        in >> k.t;
        for (double& p : k.params.p) in >> p;
        if (!in) raise(ErrorKind::config, "knot entries need 9 numbers: t p1 ... p8");
        sim.trajectory.control_points.push_back(k);
    }
    cfg.ensure_all_consumed();

    if (sim.fov_width <= 0 || sim.fov_height <= 0)
        raise(ErrorKind::config, "fov dimensions must be positive");
    if (sim.num_frames < 1) raise(ErrorKind::config, "num_frames must be >= 1");
    if (!(sim.tau > 0.0)) raise(ErrorKind::config, "tau must be positive");
    if (!(sim.flux_at_white > 0.0)) raise(ErrorKind::config, "flux_at_white must be positive");
    return sim;
}

SimConfig SimConfig::from_file(const std::filesystem::path& path) {
    FlatConfig cfg = FlatConfig::parse_file(path);
    return from_config(cfg, path.has_parent_path() ? path.parent_path() : ".");
}

Image srgb_to_linear_image(const Image8& codes) {
    Image out(codes.width, codes.height);
    for (size_t i = 0; i < codes.pixels.size(); ++i)
        out.pixels[i] = srgb_to_linear(codes.pixels[i] / 255.0);
    return out;
}

Image8 linear_to_srgb_image(const Image& linear) {
    Image8 out(linear.width, linear.height);
    for (size_t i = 0; i < linear.pixels.size(); ++i)
        out.pixels[i] = static_cast<uint8_t>(
            std::lround(255.0 * linear_to_srgb(std::clamp(linear.pixels[i], 0.0, 1.0))));
    return out;
}

Image load_panorama(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png") {
        const DecodedPng png = read_png(path);
        Image out(png.width, png.height);
        if (png.channels == 1) {
            for (size_t i = 0; i < out.pixels.size(); ++i)
                out.pixels[i] = srgb_to_linear(png.pixels[i] / 255.0);
        } else {
            for (size_t i = 0; i < out.pixels.size(); ++i) {
                const double r = srgb_to_linear(png.pixels[3 * i] / 255.0);
                const double g = srgb_to_linear(png.pixels[3 * i + 1] / 255.0);
                const double b = srgb_to_linear(png.pixels[3 * i + 2] / 255.0);
                out.pixels[i] = kLumaR * r + kLumaG * g + kLumaB * b;
            }
        }
        return out;
    }
    if (ext == ".pgm" || ext == ".pnm" || ext == ".pbm")
        return srgb_to_linear_image(read_pnm(path));
    raise(ErrorKind::argument, "panorama must be a PNG or PGM file: " + path.string());
}

namespace {

void check_fov_in_bounds(const Image& scene, const Homography& w, int fov_w, int fov_h,
                         int64_t frame_index) {
    const Vec2 corners[4] = {{0.0, 0.0},
                             {static_cast<double>(fov_w - 1), 0.0},
                             {0.0, static_cast<double>(fov_h - 1)},
                             {static_cast<double>(fov_w - 1), static_cast<double>(fov_h - 1)}};
    for (const Vec2& c : corners) {
        if (w.denominator(c) <= 0.0)
            raise(ErrorKind::simulation,
                  "frame " + std::to_string(frame_index) + ": degenerate warp");
        const Vec2 p = w.apply(c);
        if (p.x < -1e-9 || p.y < -1e-9 || p.x > scene.width - 1 + 1e-9 ||
            p.y > scene.height - 1 + 1e-9)
            raise(ErrorKind::simulation, "frame " + std::to_string(frame_index) +
                                             ": field of view leaves the panorama");
    }
}

double sample_scene(const Image& scene, double x, double y) {
    const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, scene.width - 2);
    const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, scene.height - 2);
    const double fx = std::clamp(x - x0, 0.0, 1.0);
    const double fy = std::clamp(y - y0, 0.0, 1.0);
    return (1 - fx) * (1 - fy) * scene.at(x0, y0) + fx * (1 - fy) * scene.at(x0 + 1, y0) +
           (1 - fx) * fy * scene.at(x0, y0 + 1) + fx * fy * scene.at(x0 + 1, y0 + 1);
}

}  // namespace

namespace {

// The generator is keyed by the logical frame index even when the bits land
// in a standalone single-frame cube.
void fill_binary_frame(const Image& scene, const Homography& w, const SimConfig& cfg,
                       int64_t frame_index, uint8_t* frame, size_t row_bytes) {
    check_fov_in_bounds(scene, w, cfg.fov_width, cfg.fov_height, frame_index);
    for (int y = 0; y < cfg.fov_height; ++y) {
        uint8_t* row = frame + static_cast<size_t>(y) * row_bytes;
        for (int x = 0; x < cfg.fov_width; ++x) {
            const Vec2 p = w.apply({static_cast<double>(x), static_cast<double>(y)});
            const double flux = sample_scene(scene, p.x, p.y) * cfg.flux_at_white;
            const double prob = -std::expm1(-flux * cfg.tau);
            const uint64_t pixel_index = static_cast<uint64_t>(y) * cfg.fov_width + x;
            if (rng::uniform(cfg.seed, static_cast<uint64_t>(frame_index), pixel_index) < prob)
                row[x >> 3] |= static_cast<uint8_t>(1u << (7 - (x & 7)));
        }
    }
}

}  // namespace

void sample_binary_frame(const Image& scene, const Homography& w, const SimConfig& cfg,
                         int64_t frame_index, PhotonCube& out) {
    fill_binary_frame(scene, w, cfg, frame_index, out.frame_data(frame_index), out.row_bytes());
}

Image sample_binary_frame(const Image& scene, const Homography& w, const SimConfig& cfg,
                          int64_t frame_index) {
    PhotonCube one(cfg.fov_width, cfg.fov_height, 1, cfg.tau);
    fill_binary_frame(scene, w, cfg, frame_index, one.frame_data(0), one.row_bytes());
    return one.decode_frame(0);
}

std::pair<PhotonCube, Trajectory> simulate_sequence(const SimConfig& cfg, const Image& scene) {
    if (scene.width < 2 || scene.height < 2)
        raise(ErrorKind::simulation, "panorama too small to sample");
    Trajectory truth = cfg.trajectory.to_trajectory(cfg.num_frames);
    PhotonCube cube(cfg.fov_width, cfg.fov_height, cfg.num_frames, cfg.tau);

    parallel::for_each_index(cfg.num_frames, [&](int64_t frame) {
        sample_binary_frame(scene, truth.warp_at(static_cast<double>(frame)), cfg, frame, cube);
    });
    return {std::move(cube), std::move(truth)};
}

std::pair<PhotonCube, Trajectory> simulate_sequence(const SimConfig& cfg) {
    return simulate_sequence(cfg, load_panorama(cfg.panorama_path));
}

LinearImage simulate_rgb(const Image& scene, const Trajectory& traj, int64_t window_start,
                         int64_t window_length, const SimConfig& cfg) {
    if (window_length < 1) raise(ErrorKind::argument, "simulate_rgb: empty window");
    if (window_start < 0 || window_start + window_length > cfg.num_frames)
        raise(ErrorKind::argument, "simulate_rgb: window outside the sequence");

    const int64_t samples = 8 * window_length;  // temporal supersampling
    Image blurred(cfg.fov_width, cfg.fov_height, 0.0);
    for (int64_t j = 0; j < samples; ++j) {
        const double t = static_cast<double>(window_start) +
                         (static_cast<double>(j) + 0.5) * static_cast<double>(window_length) /
                             static_cast<double>(samples);
        const Homography w = traj.warp_at(t);
        check_fov_in_bounds(scene, w, cfg.fov_width, cfg.fov_height, window_start);
        for (int y = 0; y < cfg.fov_height; ++y)
            for (int x = 0; x < cfg.fov_width; ++x) {
                const Vec2 p = w.apply({static_cast<double>(x), static_cast<double>(y)});
                blurred.at(x, y) += sample_scene(scene, p.x, p.y);
            }
    }
    const double inv = 1.0 / static_cast<double>(samples);
    for (double& v : blurred.pixels) v *= inv;

    const double duration = static_cast<double>(window_length) * cfg.tau;
    const double sigma = cfg.read_noise_sigma > 0.0
                             ? cfg.read_noise_sigma / (cfg.flux_at_white * duration)
                             : 0.0;

    LinearImage out(cfg.fov_width, cfg.fov_height);
    for (int y = 0; y < cfg.fov_height; ++y)
        for (int x = 0; x < cfg.fov_width; ++x) {
            const uint64_t pixel_index = static_cast<uint64_t>(y) * cfg.fov_width + x;
            double v = blurred.at(x, y);
            if (sigma > 0.0)
                v += sigma * rng::normal(cfg.seed ^ kRgbStreamTag,
                                         static_cast<uint64_t>(window_start), pixel_index);
            const size_t i = static_cast<size_t>(y) * cfg.fov_width + x;
            out.values[i] = std::max(0.0, v) * cfg.flux_at_white;
            out.weights[i] = 1.0;
        }
    return out;
}

}  // namespace photonpano
