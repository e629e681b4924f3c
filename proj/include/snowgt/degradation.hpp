#pragma once

#include "snowgt/image.hpp"
#include "snowgt/video_tensor.hpp"

#include <cstdint>
#include <vector>

namespace snowgt {

enum class LayerKind { snow, rain };

// One rendered particle. Positions are continuous pixel coordinates with the
// centre of pixel (r, c) at (r + 0.5, c + 0.5). Velocities are px/frame.
struct Particle {
    double x = 0.0;       // column
    double y = 0.0;       // row
    double size = 1.0;    // disc diameter (snow) or streak width sigma (rain)
    double opacity = 1.0;
    double orientation_deg = 90.0;  // rain only, measured from the +x axis, 90 = vertical
    double length = 0.0;            // rain only
    double vx = 0.0;
    double vy = 0.0;
};

// Additive degradation N of X = C + N. values is single-channel and is
// broadcast over the channels of the clean image.
struct DegradationLayer {
    Image values;
    LayerKind kind = LayerKind::snow;
    std::vector<Particle> particles;
};

// X = clamp(C + N, 0, 1).
Image compose(const Image& clean, const DegradationLayer& layer);

// X - C_est without clamping.
Image residual(const Image& degraded, const Image& clean_estimate);

// 1 where max over channels of |R| >= tau.
SnowMask binarize(const Image& residual, double tau);

// Rasterises snow discs at the given frame (positions advanced by velocity
// and wrapped at the borders). Footprint pixels carry opacity * coverage with
// coverage in [0.5, 1]; everything else is 0.
Image render_snow(std::size_t rows, std::size_t cols, const std::vector<Particle>& particles, double frame);

// Rasterises streaks with a Gaussian cross-profile truncated at half maximum.
Image render_rain(std::size_t rows, std::size_t cols, const std::vector<Particle>& particles);

// 1 wherever the layer is non-zero.
SnowMask layer_mask(const Image& layer);

struct SnowParams {
    std::size_t frames = 32;
    double density = 0.01;  // target fraction of pixels covered per frame
    double size_min = 1.0;
    double size_max = 3.0;
    double opacity_min = 0.6;
    double opacity_max = 1.0;
    double speed_min = 3.0;  // downward px/frame
    double speed_max = 6.0;
    double drift = 1.0;      // max |horizontal| px/frame
    std::uint64_t seed = 1;
};

struct SnowVideo {
    VideoTensor video;
    std::vector<SnowMask> masks;
    std::vector<DegradationLayer> layers;
    std::vector<Particle> particles;  // state at frame 0
};

SnowVideo synth_snow_video(const Image& background, const SnowParams& params);

struct RainParams {
    double orientation_deg = 90.0;
    double length = 9.0;
    double density = 0.02;
    double opacity = 0.5;
    double width = 0.7;  // Gaussian sigma of the cross-profile, px
    std::uint64_t seed = 1;
};

struct RainImage {
    Image degraded;
    SnowMask mask;
    DegradationLayer layer;
};

RainImage synth_rain_streaks(const Image& background, const RainParams& params);

// Deterministic textured scene in roughly [0.15, 0.8] for test corpora.
Image make_background(std::size_t rows, std::size_t cols, std::size_t channels, std::uint64_t seed);

} // namespace snowgt
