#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "photonpano/color.hpp"
#include "photonpano/parallel.hpp"
#include "photonpano/render.hpp"
#include "photonpano/simulator.hpp"
#include "support/test_support.hpp"

using namespace photonpano;

namespace {

std::pair<PhotonCube, Trajectory> simulate_pan(const Image& scene, int fov, int64_t frames,
                                               double pan, double flux_white, uint64_t seed) {
    SimConfig cfg;
    cfg.fov_width = fov;
    cfg.fov_height = fov;
    cfg.num_frames = frames;
    cfg.tau = 1.0;
    cfg.flux_at_white = flux_white;
    cfg.seed = seed;
    cfg.trajectory.control_points = {
        {0.0, WarpParams::translation(2.0, 2.0), 0},
        {static_cast<double>(frames - 1), WarpParams::translation(2.0 + pan, 2.0), 0}};
    return simulate_sequence(cfg, scene);
}

}  // namespace

TEST_SUITE("render") {

TEST_CASE("canvas bounds for an identity trajectory are the padded FOV") {
    const Trajectory identity = Trajectory::identity(0, 999);
    const CanvasBounds b = canvas_bounds(identity, 64, 48, 1.0, 1000);
    CHECK(b.width == 64 + 4);
    CHECK(b.height == 48 + 4);
    CHECK(b.origin_offset.x == -2.0);
    CHECK(b.origin_offset.y == -2.0);
}

TEST_CASE("canvas bounds follow a pan and scale linearly") {
    const Trajectory pan = Trajectory::fit(
        {Knot{0.0, WarpParams{}, 0}, Knot{999.0, WarpParams::translation(100, 0), 0}});
    const CanvasBounds b = canvas_bounds(pan, 64, 64, 1.0, 1000);
    CHECK(b.width >= 64 + 100 + 4);
    CHECK(b.width <= 64 + 100 + 6);

    const CanvasBounds b2 = canvas_bounds(pan, 64, 64, 2.0, 1000);
    CHECK(b2.width >= 2 * (64 + 100));
    CHECK(b2.width <= 2 * (64 + 100) + 8);
}

TEST_CASE("static assembly equals the plain MLE on the interior") {
    const Image scene = ppt::value_noise_texture(40, 40, 91, 3, 0.2, 1.0);
    auto [cube, truth] = simulate_pan(scene, 32, 400, 0.0, 0.5, 5);
    const PanoramaCanvas canvas = assemble(cube, truth.re_anchored(0.0));
    const LinearImage flux = resolve_flux(canvas, cube.tau());

    std::vector<int64_t> idx(400);
    std::iota(idx.begin(), idx.end(), 0);
    const LinearImage direct = mle_flux(mean_frame(cube, idx), cube.tau(), 400);

    const int ox = static_cast<int>(-canvas.origin_offset.x);
    const int oy = static_cast<int>(-canvas.origin_offset.y);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            CHECK(flux.value_at(x + ox, y + oy) ==
                  doctest::Approx(direct.value_at(x, y)).epsilon(1e-9));
}

TEST_CASE("panorama PSNR against the ground truth exceeds 30 dB") {
    // scene intensities span [0.2, 1.0] so phi*tau covers the stated range
    const Image scene = ppt::value_noise_texture(160, 40, 92, 3, 0.2, 1.0);
    auto [cube, truth] = simulate_pan(scene, 32, 12000, 120.0, 1.0, 6);
    const PanoramaCanvas canvas = assemble(cube, truth);
    const LinearImage flux = resolve_flux(canvas, cube.tau());

    double err_sq = 0.0;
    size_t n = 0;
    for (int y = 0; y < canvas.height; ++y)
        for (int x = 0; x < canvas.width; ++x) {
            if (flux.weight_at(x, y) <= 0.0) continue;
            const double gx = x + canvas.origin_offset.x;
            const double gy = y + canvas.origin_offset.y;
            if (gx < 1 || gy < 1 || gx > scene.width - 2 || gy > scene.height - 2) continue;
            const double ref = ppt::bilinear_at(scene, gx, gy);
            const double d = flux.value_at(x, y) / 1.0 - ref;
            err_sq += d * d;
            ++n;
        }
    REQUIRE(n > 1000);
    const double psnr = 10.0 * std::log10(1.0 / (err_sq / static_cast<double>(n)));
    CHECK(psnr > 30.0);
}

TEST_CASE("assembly is invariant under frame partitioning and worker count") {
    const Image scene = ppt::value_noise_texture(64, 40, 93, 3, 0.2, 1.0);
    auto [cube, truth] = simulate_pan(scene, 24, 1024, 20.0, 0.5, 7);

    parallel::set_workers(1);
    const PanoramaCanvas one = assemble(cube, truth);
    parallel::set_workers(7);
    const PanoramaCanvas many = assemble(cube, truth);
    parallel::set_workers(0);
    CHECK(one.sum.pixels == many.sum.pixels);
    CHECK(one.weight.pixels == many.weight.pixels);

    // manual single-pass deposition agrees to accumulation tolerance
    Image sum(one.width, one.height, 0.0), weight(one.width, one.height, 0.0);
    for (int64_t i = 0; i < cube.num_frames(); ++i) {
        const Image frame = cube.decode_frame(i);
        const Homography w = truth.warp_at(static_cast<double>(i));
        for (int py = 0; py < frame.height; ++py)
            for (int px = 0; px < frame.width; ++px) {
                const Vec2 q = w.apply({static_cast<double>(px), static_cast<double>(py)});
                const double cx = q.x - one.origin_offset.x;
                const double cy = q.y - one.origin_offset.y;
                const int x0 = static_cast<int>(std::floor(cx));
                const int y0 = static_cast<int>(std::floor(cy));
                const double fx = cx - x0, fy = cy - y0;
                const double c[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
                const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
                const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
                for (int k = 0; k < 4; ++k) {
                    if (tx[k] < 0 || ty[k] < 0 || tx[k] >= sum.width || ty[k] >= sum.height)
                        continue;
                    sum.at(tx[k], ty[k]) += c[k] * frame.at(px, py);
                    weight.at(tx[k], ty[k]) += c[k];
                }
            }
    }
    for (size_t i = 0; i < sum.pixels.size(); ++i) {
        CHECK(std::abs(sum.pixels[i] - one.sum.pixels[i]) < 1e-9);
        CHECK(std::abs(weight.pixels[i] - one.weight.pixels[i]) < 1e-9);
    }
}

TEST_CASE("total canvas weight matches the deposited sample weight") {
    const Image scene = ppt::value_noise_texture(64, 40, 94, 3, 0.2, 1.0);
    auto [cube, truth] = simulate_pan(scene, 24, 256, 10.0, 0.5, 8);
    const PanoramaCanvas canvas = assemble(cube, truth);

    double canvas_total = 0.0;
    for (double v : canvas.weight.pixels) canvas_total += v;

    // every interior sample deposits exactly one unit of weight; the canvas
    // padding keeps all warped samples in bounds for this scenario
    const double expected =
        static_cast<double>(cube.num_frames()) * cube.width() * cube.height();
    CHECK(canvas_total == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("super-resolved assembly out-resolves upsampled native assembly") {
    // checker cells of 3 scene px are 1.5 sensor px under the 2x optics warp
    Image scene = ppt::checkerboard(192, 192, 3.0, 0.15, 1.0);
    SimConfig cfg;
    cfg.fov_width = 48;
    cfg.fov_height = 48;
    cfg.num_frames = 6000;
    cfg.tau = 1.0;
    cfg.flux_at_white = 0.6;
    cfg.seed = 909;
    cfg.trajectory.kind = TrajectorySpec::Kind::spline_path;
    // slow sub-pixel drift covering many sampling phases
    for (int j = 0; j <= 8; ++j) {
        const double t = cfg.num_frames * static_cast<double>(j) / 8.0;
        WarpParams w;
        w.p[0] = 1.0;  // 2x magnification
        w.p[3] = 1.0;
        w.p[4] = 24.0 + 2.7 * std::sin(2.0 * 3.14159265 * j / 8.0);
        w.p[5] = 24.0 + 2.7 * std::cos(2.0 * 3.14159265 * j / 8.0 * 0.5);
        cfg.trajectory.control_points.push_back({std::min(t, cfg.num_frames - 1.0), w, 0});
    }
    auto [cube, truth] = simulate_sequence(cfg, scene);

    const PanoramaCanvas c2 = assemble(cube, truth, AssembleConfig{2.0, 1, 8.0});
    const LinearImage f2 = resolve_flux(c2, cube.tau());
    const PanoramaCanvas c1 = assemble(cube, truth, AssembleConfig{1.0, 1, 8.0});
    const LinearImage f1 = resolve_flux(c1, cube.tau());

    // reference at the s = 2 grid, and the s = 1 result upsampled onto it;
    // a canvas assembled with the truth trajectory lives at s times the
    // scene coordinates
    Image ref(c2.width, c2.height, 0.0), up(c2.width, c2.height, 0.0), mask(c2.width, c2.height, 0.0);
    Image f1_img(c1.width, c1.height, 0.0);
    for (size_t i = 0; i < f1.size(); ++i) f1_img.pixels[i] = f1.values[i] / cfg.flux_at_white;
    for (int y = 0; y < c2.height; ++y)
        for (int x = 0; x < c2.width; ++x) {
            const double sx = (x + c2.origin_offset.x) / 2.0;  // scene coords
            const double sy = (y + c2.origin_offset.y) / 2.0;
            if (sx < 1 || sy < 1 || sx > scene.width - 2 || sy > scene.height - 2) continue;
            if (f2.weight_at(x, y) <= 0.0) continue;
            const double ux = sx - c1.origin_offset.x;  // canvas1 pixel coords
            const double uy = sy - c1.origin_offset.y;
            if (ux < 1 || uy < 1 || ux > c1.width - 2 || uy > c1.height - 2) continue;
            if (f1.weight_at(static_cast<int>(ux), static_cast<int>(uy)) <= 0.0) continue;
            ref.at(x, y) = ppt::bilinear_at(scene, sx, sy);
            up.at(x, y) = ppt::bilinear_at(f1_img, ux, uy);
            mask.at(x, y) = 1.0;
        }
    Image f2_img(c2.width, c2.height, 0.0);
    for (size_t i = 0; i < f2.size(); ++i) f2_img.pixels[i] = f2.values[i] / cfg.flux_at_white;

    const double psnr_sr = ppt::plain_psnr(f2_img, ref, 1.0, &mask);
    const double psnr_up = ppt::plain_psnr(up, ref, 1.0, &mask);
    CHECK(psnr_sr >= psnr_up + 2.0);
}

TEST_CASE("hdr: a 100:1 flux ratio survives assembly") {
    Image scene(48, 48, 1.0);
    for (int y = 0; y < 48; ++y)
        for (int x = 24; x < 48; ++x) scene.at(x, y) = 0.01;
    SimConfig cfg;
    cfg.fov_width = 40;
    cfg.fov_height = 40;
    cfg.num_frames = 12000;
    cfg.tau = 1.0;
    cfg.flux_at_white = 2.0;  // phi*tau = 2.0 in the bright half
    cfg.seed = 404;
    cfg.trajectory.control_points = {{0.0, WarpParams::translation(2, 2), 0},
                                     {11999.0, WarpParams::translation(2, 2), 0}};
    const Image scene_copy = scene;
    auto [cube, truth] = simulate_sequence(cfg, scene_copy);
    const PanoramaCanvas canvas = assemble(cube, truth.re_anchored(0.0));
    const LinearImage flux = resolve_flux(canvas, cube.tau());

    double bright = 0.0, dark = 0.0;
    int nb = 0, nd = 0;
    for (int y = 6; y < 34; ++y)
        for (int x = 6; x < 34; ++x) {
            const int gx = static_cast<int>(x - canvas.origin_offset.x);
            const int gy = static_cast<int>(y - canvas.origin_offset.y);
            const double v = flux.value_at(gx, gy);
            // scene coordinate of this FOV pixel
            if (x + 2 < 22) {
                bright += v;
                ++nb;
            } else if (x + 2 >= 26) {
                dark += v;
                ++nd;
            }
        }
    bright /= nb;
    dark /= nd;
    CHECK(bright / dark == doctest::Approx(100.0).epsilon(0.1));
}

TEST_CASE("tonemap endpoints and mid-gray") {
    LinearImage img(3, 1);
    img.values = {0.0, 1.0, 0.2140};
    img.weights = {1.0, 1.0, 1.0};
    img.saturated = {0, 0, 0};
    const Tonemapped tm = tonemap(img, 1.0);
    CHECK(tm.image.pixels[0] == 0);
    CHECK(tm.image.pixels[1] == 255);
    // sRGB(0.214) = 0.4999 -> code 127
    const int mid = static_cast<int>(
        std::lround(255.0 * (1.055 * std::pow(0.2140, 1.0 / 2.4) - 0.055)));
    CHECK(tm.image.pixels[2] == static_cast<uint8_t>(mid));
    CHECK(tm.validity.pixels[0] == 255);

    LinearImage hole(1, 1);
    const Tonemapped masked = tonemap(hole, 1.0);
    CHECK(masked.image.pixels[0] == 0);
    CHECK(masked.validity.pixels[0] == 0);
}

TEST_CASE("flux dump round trip and 16-bit export") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "photonpano_render_test";
    fs::create_directories(dir);

    LinearImage img(5, 3);
    for (size_t i = 0; i < img.size(); ++i) {
        img.values[i] = 0.25 * static_cast<double>(i);
        img.weights[i] = 10.0;
    }
    write_flux_dump(dir / "x.flux", img);
    const LinearImage back = read_flux_dump(dir / "x.flux");
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    for (size_t i = 0; i < img.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(img.values[i]).epsilon(1e-7));

    write_flux_png16(dir / "x16.png", img);
    std::ifstream png(dir / "x16.png", std::ios::binary);
    char sig[8];
    png.read(sig, 8);
    CHECK(static_cast<uint8_t>(sig[0]) == 0x89);
    CHECK(sig[1] == 'P');
    fs::remove_all(dir);
}

TEST_CASE("resolve_flux masks sparsely covered pixels") {
    PanoramaCanvas canvas;
    canvas.width = 2;
    canvas.height = 1;
    canvas.sum = Image(2, 1, 0.0);
    canvas.weight = Image(2, 1, 0.0);
    canvas.sum.at(0, 0) = 3.0;
    canvas.weight.at(0, 0) = 12.0;
    canvas.sum.at(1, 0) = 1.0;
    canvas.weight.at(1, 0) = 2.0;  // below the default threshold of 8
    const LinearImage flux = resolve_flux(canvas, 1.0, 8.0);
    CHECK(flux.weight_at(0, 0) == 12.0);
    CHECK(flux.weight_at(1, 0) == 0.0);
}

}  // TEST_SUITE
