#include "snowgt/degradation.hpp"

#include "snowgt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace snowgt {

namespace {

// Uniform double in [lo, hi) from the raw 64-bit stream, so results do not
// depend on the standard library's distribution implementations.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * unit;
    }

private:
    std::mt19937_64 engine_;
};

std::size_t wrap(long long v, std::size_t extent) {
    const auto n = static_cast<long long>(extent);
    return static_cast<std::size_t>(((v % n) + n) % n);
}

constexpr int kSubsamples = 4;

// Disc footprint of one particle, wrapped; calls emit(r, c, value).
template <typename Emit>
void rasterise_disc(std::size_t rows, std::size_t cols, double cy, double cx, const Particle& p, Emit&& emit) {
    const double radius = p.size / 2.0;
    const auto r0 = static_cast<long long>(std::floor(cy - radius)) - 1;
    const auto r1 = static_cast<long long>(std::floor(cy + radius)) + 1;
    const auto c0 = static_cast<long long>(std::floor(cx - radius)) - 1;
    const auto c1 = static_cast<long long>(std::floor(cx + radius)) + 1;
    const auto centre_r = static_cast<long long>(std::floor(cy));
    const auto centre_c = static_cast<long long>(std::floor(cx));
    const double r2 = radius * radius;
    for (long long r = r0; r <= r1; ++r) {
        for (long long c = c0; c <= c1; ++c) {
            int hits = 0;
            for (int i = 0; i < kSubsamples; ++i) {
                const double sy = static_cast<double>(r) + (i + 0.5) / kSubsamples - cy;
                for (int j = 0; j < kSubsamples; ++j) {
                    const double sx = static_cast<double>(c) + (j + 0.5) / kSubsamples - cx;
                    if (sy * sy + sx * sx <= r2) {
                        ++hits;
                    }
                }
            }
            double coverage = static_cast<double>(hits) / (kSubsamples * kSubsamples);
            if (r == centre_r && c == centre_c) {
                coverage = std::max(coverage, 0.5);
            }
            if (coverage < 0.5) {
                continue;
            }
            emit(wrap(r, rows), wrap(c, cols), p.opacity * coverage);
        }
    }
}

template <typename Emit>
void rasterise_streak(std::size_t rows, std::size_t cols, const Particle& p, Emit&& emit) {
    const double theta = p.orientation_deg * std::numbers::pi / 180.0;
    const double dx = std::cos(theta);
    const double dy = -std::sin(theta);
    const double half = p.length / 2.0;
    const double sigma = p.size;
    const double reach = sigma * std::sqrt(2.0 * std::log(2.0));
    const double ext = half + reach + 1.0;
    const auto r0 = std::max<long long>(0, static_cast<long long>(std::floor(p.y - ext)));
    const auto r1 = std::min<long long>(static_cast<long long>(rows) - 1, static_cast<long long>(std::ceil(p.y + ext)));
    const auto c0 = std::max<long long>(0, static_cast<long long>(std::floor(p.x - ext)));
    const auto c1 = std::min<long long>(static_cast<long long>(cols) - 1, static_cast<long long>(std::ceil(p.x + ext)));
    for (long long r = r0; r <= r1; ++r) {
        for (long long c = c0; c <= c1; ++c) {
            const double py = static_cast<double>(r) + 0.5 - p.y;
            const double px = static_cast<double>(c) + 0.5 - p.x;
            const double along = std::clamp(px * dx + py * dy, -half, half);
            const double ex = px - along * dx;
            const double ey = py - along * dy;
            const double dist2 = ex * ex + ey * ey;
            const double profile = std::exp(-dist2 / (2.0 * sigma * sigma));
            if (profile < 0.5) {
                continue;
            }
            emit(static_cast<std::size_t>(r), static_cast<std::size_t>(c), p.opacity * profile);
        }
    }
}

std::size_t footprint_snow(std::size_t rows, std::size_t cols, const Particle& p) {
    std::size_t count = 0;
    rasterise_disc(rows, cols, p.y, p.x, p, [&](std::size_t, std::size_t, double) { ++count; });
    return count;
}

std::size_t footprint_rain(std::size_t rows, std::size_t cols, const Particle& p) {
    std::size_t count = 0;
    rasterise_streak(rows, cols, p, [&](std::size_t, std::size_t, double) { ++count; });
    return count;
}

} // namespace

Image compose(const Image& clean, const DegradationLayer& layer) {
    const Image& n = layer.values;
    if (n.rows() != clean.rows() || n.cols() != clean.cols() ||
        (n.channels() != 1 && n.channels() != clean.channels())) {
        throw BoundsError("degradation layer does not match the clean image");
    }
    Image out(clean.rows(), clean.cols(), clean.channels());
    for (std::size_t r = 0; r < clean.rows(); ++r) {
        for (std::size_t c = 0; c < clean.cols(); ++c) {
            for (std::size_t ch = 0; ch < clean.channels(); ++ch) {
                const double add = n.at(r, c, n.channels() == 1 ? 0 : ch);
                out.at(r, c, ch) = std::clamp(clean.at(r, c, ch) + add, 0.0, 1.0);
            }
        }
    }
    return out;
}

Image residual(const Image& degraded, const Image& clean_estimate) {
    require_same_shape(degraded, clean_estimate, "residual");
    Image out(degraded.rows(), degraded.cols(), degraded.channels());
    auto x = degraded.values();
    auto c = clean_estimate.values();
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = x[i] - c[i];
    }
    return out;
}

SnowMask binarize(const Image& residual, double tau) {
    SnowMask mask(residual.rows(), residual.cols(), tau);
    for (std::size_t r = 0; r < residual.rows(); ++r) {
        for (std::size_t c = 0; c < residual.cols(); ++c) {
            double peak = 0.0;
            for (std::size_t ch = 0; ch < residual.channels(); ++ch) {
                peak = std::max(peak, std::abs(residual.at(r, c, ch)));
            }
            mask.at(r, c) = peak >= tau ? 1 : 0;
        }
    }
    return mask;
}

Image render_snow(std::size_t rows, std::size_t cols, const std::vector<Particle>& particles, double frame) {
    Image layer(rows, cols, 1);
    for (const Particle& p : particles) {
        const double cy = p.y + p.vy * frame;
        const double cx = p.x + p.vx * frame;
        rasterise_disc(rows, cols, cy, cx, p, [&](std::size_t r, std::size_t c, double v) {
            layer.at(r, c) = std::max(layer.at(r, c), v);
        });
    }
    return layer;
}

Image render_rain(std::size_t rows, std::size_t cols, const std::vector<Particle>& particles) {
    Image layer(rows, cols, 1);
    for (const Particle& p : particles) {
        rasterise_streak(rows, cols, p, [&](std::size_t r, std::size_t c, double v) {
            layer.at(r, c) = std::max(layer.at(r, c), v);
        });
    }
    return layer;
}

SnowMask layer_mask(const Image& layer) {
    SnowMask mask(layer.rows(), layer.cols());
    for (std::size_t r = 0; r < layer.rows(); ++r) {
        for (std::size_t c = 0; c < layer.cols(); ++c) {
            bool hit = false;
            for (std::size_t ch = 0; ch < layer.channels(); ++ch) {
                hit = hit || layer.at(r, c, ch) > 0.0;
            }
            mask.at(r, c) = hit ? 1 : 0;
        }
    }
    return mask;
}

SnowVideo synth_snow_video(const Image& background, const SnowParams& params) {
    if (params.frames < 4) {
        throw ParameterError("snow video needs at least 4 frames");
    }
    if (!(params.density >= 0.0 && params.density <= 1.0)) {
        throw ParameterError("snow density must lie in [0, 1]");
    }
    if (!(params.size_min > 0.0 && params.size_min <= params.size_max)) {
        throw ParameterError("snow size range must satisfy 0 < min <= max");
    }
    if (!(params.opacity_min >= 0.0 && params.opacity_min <= params.opacity_max && params.opacity_max <= 1.0)) {
        throw ParameterError("snow opacity range must satisfy 0 <= min <= max <= 1");
    }
    if (params.speed_min > params.speed_max || params.drift < 0.0) {
        throw ParameterError("snow speed range is inverted or drift is negative");
    }
    const std::size_t rows = background.rows();
    const std::size_t cols = background.cols();
    if (static_cast<double>(std::min(rows, cols)) < params.size_max + 2.0) {
        throw ParameterError("background is too small for the largest snow particle");
    }

    Sampler rng(params.seed);
    SnowVideo out;
    const double target = params.density * static_cast<double>(rows * cols);
    double covered = 0.0;
    while (covered < target) {
        Particle p;
        p.x = rng.uniform(0.0, static_cast<double>(cols));
        p.y = rng.uniform(0.0, static_cast<double>(rows));
        p.size = rng.uniform(params.size_min, params.size_max);
        p.opacity = rng.uniform(params.opacity_min, params.opacity_max);
        p.vy = rng.uniform(params.speed_min, params.speed_max);
        p.vx = rng.uniform(-params.drift, params.drift);
        covered += static_cast<double>(footprint_snow(rows, cols, p));
        out.particles.push_back(p);
    }

    std::vector<Image> frames;
    frames.reserve(params.frames);
    for (std::size_t f = 0; f < params.frames; ++f) {
        DegradationLayer layer{render_snow(rows, cols, out.particles, static_cast<double>(f)), LayerKind::snow, {}};
        layer.particles.reserve(out.particles.size());
        for (Particle p : out.particles) {
            p.x = std::fmod(p.x + p.vx * static_cast<double>(f), static_cast<double>(cols));
            p.y = std::fmod(p.y + p.vy * static_cast<double>(f), static_cast<double>(rows));
            p.x += p.x < 0.0 ? static_cast<double>(cols) : 0.0;
            p.y += p.y < 0.0 ? static_cast<double>(rows) : 0.0;
            layer.particles.push_back(p);
        }
        frames.push_back(compose(background, layer));
        out.masks.push_back(layer_mask(layer.values));
        out.layers.push_back(std::move(layer));
    }
    out.video = VideoTensor::from_frames(frames);
    return out;
}

RainImage synth_rain_streaks(const Image& background, const RainParams& params) {
    if (!(params.density >= 0.0 && params.density <= 1.0)) {
        throw ParameterError("rain density must lie in [0, 1]");
    }
    if (!(params.opacity >= 0.0 && params.opacity <= 1.0)) {
        throw ParameterError("rain opacity must lie in [0, 1]");
    }
    if (params.length <= 0.0 || params.width <= 0.0) {
        throw ParameterError("rain streak length and width must be positive");
    }
    const std::size_t rows = background.rows();
    const std::size_t cols = background.cols();
    if (static_cast<double>(std::min(rows, cols)) < params.length) {
        throw ParameterError("background is too small for the streak length");
    }

    Sampler rng(params.seed);
    DegradationLayer layer;
    layer.kind = LayerKind::rain;
    const double target = params.density * static_cast<double>(rows * cols);
    double covered = 0.0;
    std::size_t misses = 0;
    while (covered < target && misses < 1000) {
        Particle p;
        p.x = rng.uniform(0.0, static_cast<double>(cols));
        p.y = rng.uniform(0.0, static_cast<double>(rows));
        p.size = params.width;
        p.opacity = params.opacity;
        p.orientation_deg = params.orientation_deg;
        p.length = params.length;
        const std::size_t area = footprint_rain(rows, cols, p);
        if (area == 0) {
            ++misses;
            continue;
        }
        covered += static_cast<double>(area);
        layer.particles.push_back(p);
    }
    layer.values = render_rain(rows, cols, layer.particles);
    RainImage out;
    out.degraded = compose(background, layer);
    out.mask = layer_mask(layer.values);
    out.layer = std::move(layer);
    return out;
}

Image make_background(std::size_t rows, std::size_t cols, std::size_t channels, std::uint64_t seed) {
    Sampler rng(seed);
    Image img(rows, cols, channels);
    const double fy = rng.uniform(1.0, 3.0);
    const double fx = rng.uniform(1.0, 3.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    struct Block {
        double r0, c0, h, w, level;
    };
    std::vector<Block> blocks;
    for (int i = 0; i < 4; ++i) {
        blocks.push_back({rng.uniform(0.0, static_cast<double>(rows)), rng.uniform(0.0, static_cast<double>(cols)),
                          rng.uniform(2.0, static_cast<double>(rows) / 3.0),
                          rng.uniform(2.0, static_cast<double>(cols) / 3.0), rng.uniform(-0.15, 0.15)});
    }
    std::vector<double> tint(channels);
    for (auto& t : tint) {
        t = rng.uniform(-0.05, 0.05);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double y = static_cast<double>(r) / static_cast<double>(rows);
            const double x = static_cast<double>(c) / static_cast<double>(cols);
            double v = 0.25 + 0.25 * y + 0.1 * x +
                       0.08 * std::sin(2.0 * std::numbers::pi * (fy * y + fx * x) + phase);
            for (const Block& b : blocks) {
                if (r >= b.r0 && r < b.r0 + b.h && c >= b.c0 && c < b.c0 + b.w) {
                    v += b.level;
                }
            }
            for (std::size_t ch = 0; ch < channels; ++ch) {
                img.at(r, c, ch) = std::clamp(v + tint[ch], 0.15, 0.8);
            }
        }
    }
    return img;
}

} // namespace snowgt
