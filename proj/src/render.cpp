#include "photonpano/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "photonpano/color.hpp"
#include "photonpano/image_io.hpp"
#include "photonpano/parallel.hpp"

namespace photonpano {

CanvasBounds canvas_bounds(const Trajectory& traj, int fov_width, int fov_height, double scale,
                           int64_t num_frames) {
    if (fov_width < 1 || fov_height < 1 || num_frames < 1)
        raise(ErrorKind::argument, "canvas_bounds: empty field of view or sequence");

    std::vector<double> times;
    for (const Knot& k : traj.knots()) times.push_back(k.t);
    for (int64_t t = 0; t < num_frames; t += 100) times.push_back(static_cast<double>(t));
    times.push_back(static_cast<double>(num_frames - 1));

    const double sx = scale * (fov_width - 1);
    const double sy = scale * (fov_height - 1);
    const Vec2 corners[4] = {{0.0, 0.0}, {sx, 0.0}, {0.0, sy}, {sx, sy}};

    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    double max_x = -min_x, max_y = -min_y;
    for (double t : times) {
        const Homography w = scale_warp(traj.warp_at(t), scale);
        for (const Vec2& c : corners) {
            if (w.denominator(c) <= 0.0)
                raise(ErrorKind::degeneracy,
                      "canvas_bounds: FOV corner maps behind the camera plane");
            const Vec2 p = w.apply(c);
            min_x = std::min(min_x, p.x);
            min_y = std::min(min_y, p.y);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
    }

    constexpr double pad = 2.0;
    CanvasBounds bounds;
    bounds.origin_offset = {std::floor(min_x - pad), std::floor(min_y - pad)};
    bounds.width = static_cast<int>(std::ceil(max_x + pad) - bounds.origin_offset.x) + 1;
    bounds.height = static_cast<int>(std::ceil(max_y + pad) - bounds.origin_offset.y) + 1;
    return bounds;
}

// Forward deposition of one binary frame: every input sample lands at its
// warped position on the canvas through a bilinear splat. Unlike the inverse
// gather used for group merging, the splat footprint lives at canvas scale,
// which is what lets an upsampled canvas resolve beyond the sensor grid.
static void splat_frame(const Image& frame, const Homography& to_canvas, Image& sum,
                        Image& weight, Vec2 origin) {
    const int cw = sum.width;
    const int ch = sum.height;
    for (int py = 0; py < frame.height; ++py) {
        for (int px = 0; px < frame.width; ++px) {
            const Vec2 fp{static_cast<double>(px), static_cast<double>(py)};
            if (to_canvas.denominator(fp) <= 1e-12) continue;
            const Vec2 q = to_canvas.apply(fp);
            const double cx = q.x - origin.x;
            const double cy = q.y - origin.y;
            if (cx <= -1.0 || cy <= -1.0 || cx >= cw || cy >= ch) continue;
            const int x0 = static_cast<int>(std::floor(cx));
            const int y0 = static_cast<int>(std::floor(cy));
            const double fx = cx - x0;
            const double fy = cy - y0;
            const double value = frame.at(px, py);
            const double c[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            const int tx[4] = {x0, x0 + 1, x0, x0 + 1};
            const int ty[4] = {y0, y0, y0 + 1, y0 + 1};
            for (int k = 0; k < 4; ++k) {
                if (tx[k] < 0 || ty[k] < 0 || tx[k] >= cw || ty[k] >= ch) continue;
                sum.at(tx[k], ty[k]) += c[k] * value;
                weight.at(tx[k], ty[k]) += c[k];
            }
        }
    }
}

PanoramaCanvas assemble(const PhotonCube& cube, const Trajectory& traj,
                        const AssembleConfig& cfg) {
    if (cfg.frame_stride < 1) raise(ErrorKind::argument, "assemble: stride must be >= 1");
    if (!(cfg.scale > 0.0)) raise(ErrorKind::argument, "assemble: scale must be positive");

    const CanvasBounds bounds =
        canvas_bounds(traj, cube.width(), cube.height(), cfg.scale, cube.num_frames());
    if (bounds.width <= 0 || bounds.height <= 0)
        raise(ErrorKind::render, "assemble: empty canvas");

    std::vector<int64_t> frames;
    for (int64_t i = 0; i < cube.num_frames(); i += cfg.frame_stride) frames.push_back(i);

    // Fixed chunk grid: per-chunk canvases reduced in chunk order keep the
    // accumulation identical for every worker count.
    const int64_t chunk_size =
        std::max<int64_t>(256, (static_cast<int64_t>(frames.size()) + 31) / 32);
    const int64_t chunks =
        (static_cast<int64_t>(frames.size()) + chunk_size - 1) / chunk_size;

    std::vector<Image> sums(static_cast<size_t>(chunks));
    std::vector<Image> weights(static_cast<size_t>(chunks));
    parallel::for_each_index(chunks, [&](int64_t c) {
        Image sum(bounds.width, bounds.height, 0.0);
        Image weight(bounds.width, bounds.height, 0.0);
        Image frame(cube.width(), cube.height());
        const int64_t begin = c * chunk_size;
        const int64_t end = std::min<int64_t>(begin + chunk_size, static_cast<int64_t>(frames.size()));
        for (int64_t k = begin; k < end; ++k) {
            const int64_t i = frames[static_cast<size_t>(k)];
            Homography w = traj.warp_at(static_cast<double>(i));
            if (cfg.scale != 1.0) w = compose(scaling(cfg.scale), w);
            cube.decode_frame(i, frame);
            splat_frame(frame, w, sum, weight, bounds.origin_offset);
        }
        sums[static_cast<size_t>(c)] = std::move(sum);
        weights[static_cast<size_t>(c)] = std::move(weight);
    });

    PanoramaCanvas canvas;
    canvas.width = bounds.width;
    canvas.height = bounds.height;
    canvas.origin_offset = bounds.origin_offset;
    canvas.scale = cfg.scale;
    canvas.sum = Image(bounds.width, bounds.height, 0.0);
    canvas.weight = Image(bounds.width, bounds.height, 0.0);
    for (int64_t c = 0; c < chunks; ++c) {
        const Image& s = sums[static_cast<size_t>(c)];
        const Image& w = weights[static_cast<size_t>(c)];
        for (size_t i = 0; i < canvas.sum.pixels.size(); ++i) {
            canvas.sum.pixels[i] += s.pixels[i];
            canvas.weight.pixels[i] += w.pixels[i];
        }
    }
    return canvas;
}

LinearImage resolve_flux(const PanoramaCanvas& canvas, double tau, double weight_min) {
    Image fraction(canvas.width, canvas.height, 0.0);
    Image weight(canvas.width, canvas.height, 0.0);
    bool any = false;
    for (size_t i = 0; i < fraction.pixels.size(); ++i) {
        const double w = canvas.weight.pixels[i];
        if (w >= weight_min && w > 0.0) {
            fraction.pixels[i] = canvas.sum.pixels[i] / w;
            weight.pixels[i] = w;
            any = true;
        }
    }
    if (!any) raise(ErrorKind::render, "resolve_flux: no pixel reaches the weight threshold");
    return mle_flux(fraction, tau, weight);
}

namespace {

double percentile(const LinearImage& img, double q) {
    std::vector<double> vals;
    vals.reserve(img.size());
    for (size_t i = 0; i < img.size(); ++i)
        if (img.weights[i] > 0.0) vals.push_back(img.values[i]);
    if (vals.empty()) return 0.0;
    const size_t idx = static_cast<size_t>(
        std::llround(q * static_cast<double>(vals.size() - 1)));
    std::nth_element(vals.begin(), vals.begin() + static_cast<ptrdiff_t>(idx), vals.end());
    return vals[idx];
}

}  // namespace

double default_exposure(const LinearImage& img) {
    const double p99 = percentile(img, 0.99);
    return p99 > 0.0 ? 1.0 / p99 : 1.0;
}

Tonemapped tonemap(const LinearImage& img, double exposure) {
    Tonemapped out{Image8(img.width, img.height, 0), Image8(img.width, img.height, 0)};
    for (size_t i = 0; i < img.size(); ++i) {
        if (img.weights[i] <= 0.0) continue;
        out.validity.pixels[i] = 255;
        const double v = std::clamp(exposure * img.values[i], 0.0, 1.0);
        out.image.pixels[i] = static_cast<uint8_t>(std::lround(255.0 * linear_to_srgb(v)));
    }
    return out;
}

void write_flux_dump(const std::filesystem::path& path, const LinearImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::io, "cannot write " + path.string());
    const char magic[4] = {'F', 'L', 'U', 'X'};
    out.write(magic, 4);
    auto write_u32 = [&](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    write_u32(static_cast<uint32_t>(img.width));
    write_u32(static_cast<uint32_t>(img.height));
    write_u32(0);
    for (size_t i = 0; i < img.size(); ++i) {
        const float v = static_cast<float>(img.values[i]);
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        uint8_t b[4] = {static_cast<uint8_t>(bits), static_cast<uint8_t>(bits >> 8),
                        static_cast<uint8_t>(bits >> 16), static_cast<uint8_t>(bits >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }
    if (!out) raise(ErrorKind::io, "short write to " + path.string());
}

LinearImage read_flux_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FLUX", 4) != 0)
        raise(ErrorKind::format, path.string() + ": not a flux dump");
    auto read_u32 = [&]() {
        uint8_t b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) raise(ErrorKind::format, path.string() + ": truncated flux dump");
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    };
    const uint32_t width = read_u32();
    const uint32_t height = read_u32();
    read_u32();  // reserved
    LinearImage img(static_cast<int>(width), static_cast<int>(height));
    for (size_t i = 0; i < img.size(); ++i) {
        const uint32_t bits = read_u32();
        float v;
        std::memcpy(&v, &bits, 4);
        img.values[i] = v;
        img.weights[i] = 1.0;
    }
    return img;
}

void write_flux_png16(const std::filesystem::path& path, const LinearImage& img) {
    const double peak = percentile(img, 0.999);
    std::vector<uint16_t> codes(img.size(), 0);
    if (peak > 0.0)
        for (size_t i = 0; i < img.size(); ++i)
            if (img.weights[i] > 0.0)
                codes[i] = static_cast<uint16_t>(
                    std::lround(65535.0 * std::clamp(img.values[i] / peak, 0.0, 1.0)));
    write_png16(path, img.width, img.height, codes);
}

}  // namespace photonpano
