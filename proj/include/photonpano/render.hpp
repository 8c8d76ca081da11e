#pragma once

#include <cstdint>
#include <filesystem>

#include "photonpano/photon_cube.hpp"
#include "photonpano/trajectory.hpp"

namespace photonpano {

// Accumulation canvas for the final panorama. origin_offset is the global
// warp coordinate of canvas pixel (0, 0); scale is the super-resolution
// factor baked into the accumulated warps.
struct PanoramaCanvas {
    int width = 0;
    int height = 0;
    Vec2 origin_offset;
    Image sum;     // accumulated warped binary values
    Image weight;  // accumulated warp weights
    double scale = 1.0;
};

struct CanvasBounds {
    int width = 0;
    int height = 0;
    Vec2 origin_offset;
};

// Bounding box of the four FOV corners swept through scale_warp(W(t), s) at
// every knot and every 100th frame, padded by 2 px.
CanvasBounds canvas_bounds(const Trajectory& traj, int fov_width, int fov_height, double scale,
                           int64_t num_frames);

struct AssembleConfig {
    double scale = 1.0;
    int64_t frame_stride = 1;
    double weight_min = 8.0;  // minimum binary samples per rendered pixel
};

// Warps every (stride-subsampled) binary frame through its interpolated warp
// and accumulates values and weights: each binary sample is deposited at its
// warped position with a bilinear splat, so the per-pixel weight counts the
// binary samples hitting that canvas pixel. Deterministic for any worker
// count: frames are processed in fixed chunks reduced in chunk order.
PanoramaCanvas assemble(const PhotonCube& cube, const Trajectory& traj,
                        const AssembleConfig& cfg = {});

// Completes the estimator: fraction = sum/weight where weight >= weight_min,
// then flux with per-pixel sample count. Sparser pixels become no-data.
LinearImage resolve_flux(const PanoramaCanvas& canvas, double tau, double weight_min = 8.0);

struct Tonemapped {
    Image8 image;
    Image8 validity;  // 255 where data, 0 where masked
};

// code = srgb(clamp(exposure * flux, 0, 1)); no-data pixels render as 0 and
// are reported through the validity mask.
Tonemapped tonemap(const LinearImage& img, double exposure);

// Default display exposure: 1 / (99th-percentile flux over valid pixels).
double default_exposure(const LinearImage& img);

// Flux dump: magic "FLUX", little-endian u32 width, u32 height,
// u32 reserved = 0, then width*height little-endian f32 values row-major.
void write_flux_dump(const std::filesystem::path& path, const LinearImage& img);
LinearImage read_flux_dump(const std::filesystem::path& path);

// 16-bit PNG with flux linearly quantized to the 99.9th percentile.
void write_flux_png16(const std::filesystem::path& path, const LinearImage& img);

}  // namespace photonpano
