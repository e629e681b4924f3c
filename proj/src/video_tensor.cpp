#include "snowgt/video_tensor.hpp"

#include "snowgt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace snowgt {

namespace {

std::string dims(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

void check_slice_shape(const VideoTensor& t, const SliceView& s) {
    if (s.channel >= t.channels()) {
        throw BoundsError("slice channel " + std::to_string(s.channel) + " out of range");
    }
    if (s.index >= slice_count(t, s.mode)) {
        throw BoundsError(std::string(to_string(s.mode)) + " slice index " + std::to_string(s.index) +
                          " out of range");
    }
    std::size_t want_rows = 0;
    std::size_t want_cols = 0;
    switch (s.mode) {
    case SliceMode::horizontal:
        want_rows = t.frames();
        want_cols = t.cols();
        break;
    case SliceMode::lateral:
        want_rows = t.frames();
        want_cols = t.rows();
        break;
    case SliceMode::frontal:
        want_rows = t.rows();
        want_cols = t.cols();
        break;
    }
    if (static_cast<std::size_t>(s.matrix.rows()) != want_rows ||
        static_cast<std::size_t>(s.matrix.cols()) != want_cols) {
        throw BoundsError(std::string(to_string(s.mode)) + " slice must be " + dims(want_rows, want_cols) +
                          ", got " + dims(s.matrix.rows(), s.matrix.cols()));
    }
}

} // namespace

VideoTensor::VideoTensor(std::size_t rows, std::size_t cols, std::size_t frames, std::size_t channels,
                         std::vector<double> values)
    : rows_(rows), cols_(cols), frames_(frames), channels_(channels), values_(std::move(values)) {
    if (rows < 2 || cols < 2) {
        throw DimensionMismatch("video frames must be at least 2x2, got " + dims(rows, cols));
    }
    if (frames < 2) {
        throw InsufficientFrames("video needs at least 2 frames, got " + std::to_string(frames));
    }
    if (channels != 1 && channels != 3) {
        throw ParameterError("video must have 1 or 3 channels, got " + std::to_string(channels));
    }
    if (values_.size() != rows * cols * frames * channels) {
        throw DimensionMismatch("video buffer size does not match its dimensions");
    }
    for (double& v : values_) {
        if (!std::isfinite(v)) {
            throw ParameterError("video contains a non-finite value");
        }
        v = std::clamp(v, 0.0, 1.0);
    }
}

VideoTensor VideoTensor::from_frames(std::span<const Image> frames) {
    if (frames.size() < 2) {
        throw InsufficientFrames("video needs at least 2 frames, got " + std::to_string(frames.size()));
    }
    const Image& first = frames.front();
    const std::size_t m = first.rows();
    const std::size_t n = first.cols();
    const std::size_t c = first.channels();
    const std::size_t k = frames.size();
    std::vector<double> values(m * n * k * c);
    for (std::size_t f = 0; f < k; ++f) {
        const Image& img = frames[f];
        if (!img.same_shape(first)) {
            throw DimensionMismatch("frame " + std::to_string(f) + " is " + dims(img.rows(), img.cols()) +
                                    "x" + std::to_string(img.channels()) + ", expected " + dims(m, n) + "x" +
                                    std::to_string(c));
        }
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t r = 0; r < m; ++r) {
                for (std::size_t col = 0; col < n; ++col) {
                    values[((ch * k + f) * m + r) * n + col] = img.at(r, col, ch);
                }
            }
        }
    }
    return VideoTensor(m, n, k, c, std::move(values));
}

Image VideoTensor::frame(std::size_t f) const {
    if (f >= frames_) {
        throw BoundsError("frame " + std::to_string(f) + " out of range");
    }
    Image img(rows_, cols_, channels_);
    for (std::size_t ch = 0; ch < channels_; ++ch) {
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) {
                img.at(r, c, ch) = at(r, c, f, ch);
            }
        }
    }
    return img;
}

std::vector<Image> VideoTensor::to_frames() const {
    std::vector<Image> out;
    out.reserve(frames_);
    for (std::size_t f = 0; f < frames_; ++f) {
        out.push_back(frame(f));
    }
    return out;
}

std::string_view to_string(SliceMode mode) {
    switch (mode) {
    case SliceMode::horizontal:
        return "horizontal";
    case SliceMode::lateral:
        return "lateral";
    case SliceMode::frontal:
        return "frontal";
    }
    return "unknown";
}

SliceMode parse_slice_mode(std::string_view text) {
    if (text == "horizontal") {
        return SliceMode::horizontal;
    }
    if (text == "lateral") {
        return SliceMode::lateral;
    }
    if (text == "frontal") {
        return SliceMode::frontal;
    }
    throw ParameterError("unknown slice mode '" + std::string(text) + "'");
}

std::size_t slice_count(const VideoTensor& t, SliceMode mode) {
    switch (mode) {
    case SliceMode::horizontal:
        return t.rows();
    case SliceMode::lateral:
        return t.cols();
    case SliceMode::frontal:
        return t.frames();
    }
    return 0;
}

SliceView extract_slice(const VideoTensor& t, SliceMode mode, std::size_t index, std::size_t channel) {
    if (channel >= t.channels()) {
        throw BoundsError("slice channel " + std::to_string(channel) + " out of range");
    }
    if (index >= slice_count(t, mode)) {
        throw BoundsError(std::string(to_string(mode)) + " slice index " + std::to_string(index) +
                          " out of range");
    }
    SliceView s{mode, index, channel, {}};
    const auto m = static_cast<Eigen::Index>(t.rows());
    const auto n = static_cast<Eigen::Index>(t.cols());
    const auto k = static_cast<Eigen::Index>(t.frames());
    switch (mode) {
    case SliceMode::horizontal:
        s.matrix.resize(k, n);
        for (Eigen::Index f = 0; f < k; ++f) {
            for (Eigen::Index c = 0; c < n; ++c) {
                s.matrix(f, c) = t.at(index, c, f, channel);
            }
        }
        break;
    case SliceMode::lateral:
        s.matrix.resize(k, m);
        for (Eigen::Index f = 0; f < k; ++f) {
            for (Eigen::Index r = 0; r < m; ++r) {
                s.matrix(f, r) = t.at(r, index, f, channel);
            }
        }
        break;
    case SliceMode::frontal:
        s.matrix.resize(m, n);
        for (Eigen::Index r = 0; r < m; ++r) {
            for (Eigen::Index c = 0; c < n; ++c) {
                s.matrix(r, c) = t.at(r, c, index, channel);
            }
        }
        break;
    }
    return s;
}

void write_slice(const VideoTensor& layout, std::span<double> buffer, const SliceView& s) {
    check_slice_shape(layout, s);
    if (buffer.size() != layout.values().size()) {
        throw BoundsError("slice target buffer does not match tensor size");
    }
    auto put = [&](std::size_t r, std::size_t c, std::size_t f, double v) {
        buffer[layout.offset(r, c, f, s.channel)] = std::clamp(v, 0.0, 1.0);
    };
    const auto rows = static_cast<std::size_t>(s.matrix.rows());
    const auto cols = static_cast<std::size_t>(s.matrix.cols());
    for (std::size_t a = 0; a < rows; ++a) {
        for (std::size_t b = 0; b < cols; ++b) {
            const double v = s.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            switch (s.mode) {
            case SliceMode::horizontal:
                put(s.index, b, a, v);
                break;
            case SliceMode::lateral:
                put(b, s.index, a, v);
                break;
            case SliceMode::frontal:
                put(a, b, s.index, v);
                break;
            }
        }
    }
}

VideoTensor replace_slice(const VideoTensor& t, const SliceView& s) {
    std::vector<double> values(t.values().begin(), t.values().end());
    write_slice(t, values, s);
    return VideoTensor(t.rows(), t.cols(), t.frames(), t.channels(), std::move(values));
}

std::array<Image, 4> split_quadrants(const Image& frame) {
    if (frame.rows() < 2 || frame.cols() < 2) {
        throw DimensionMismatch("quadrant split needs an image of at least 2x2");
    }
    const std::size_t top = (frame.rows() + 1) / 2;
    const std::size_t left = (frame.cols() + 1) / 2;
    const std::size_t bottom = frame.rows() - top;
    const std::size_t right = frame.cols() - left;
    return {frame.crop(0, 0, top, left), frame.crop(0, left, top, right), frame.crop(top, 0, bottom, left),
            frame.crop(top, left, bottom, right)};
}

Image join_quadrants(const std::array<Image, 4>& quads) {
    const auto& [tl, tr, bl, br] = quads;
    if (tl.rows() != tr.rows() || bl.rows() != br.rows() || tl.cols() != bl.cols() || tr.cols() != br.cols()) {
        throw DimensionMismatch("quadrants do not tile a rectangle");
    }
    const std::size_t ch = tl.channels();
    Image out(tl.rows() + bl.rows(), tl.cols() + tr.cols(), ch);
    auto blit = [&](const Image& q, std::size_t r0, std::size_t c0) {
        if (q.channels() != ch) {
            throw DimensionMismatch("quadrant channel counts differ");
        }
        for (std::size_t r = 0; r < q.rows(); ++r) {
            for (std::size_t c = 0; c < q.cols(); ++c) {
                for (std::size_t k = 0; k < ch; ++k) {
                    out.at(r0 + r, c0 + c, k) = q.at(r, c, k);
                }
            }
        }
    };
    blit(tl, 0, 0);
    blit(tr, 0, tl.cols());
    blit(bl, tl.rows(), 0);
    blit(br, tl.rows(), tl.cols());
    return out;
}

std::array<VideoTensor, 4> split_quadrants(const VideoTensor& t) {
    std::array<std::vector<Image>, 4> parts;
    for (std::size_t f = 0; f < t.frames(); ++f) {
        auto quads = split_quadrants(t.frame(f));
        for (std::size_t q = 0; q < 4; ++q) {
            parts[q].push_back(std::move(quads[q]));
        }
    }
    return {VideoTensor::from_frames(parts[0]), VideoTensor::from_frames(parts[1]),
            VideoTensor::from_frames(parts[2]), VideoTensor::from_frames(parts[3])};
}

} // namespace snowgt
