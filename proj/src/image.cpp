#include "snowgt/image.hpp"

#include "snowgt/errors.hpp"

#include <algorithm>
#include <numeric>

namespace snowgt {

Image::Image(std::size_t rows, std::size_t cols, std::size_t channels, double fill)
    : rows_(rows), cols_(cols), channels_(channels), values_(rows * cols * channels, fill) {}

Image::Image(std::size_t rows, std::size_t cols, std::size_t channels, std::vector<double> values)
    : rows_(rows), cols_(cols), channels_(channels), values_(std::move(values)) {
    if (values_.size() != rows * cols * channels) {
        throw DimensionMismatch("image buffer holds " + std::to_string(values_.size()) +
                                " values, expected " + std::to_string(rows * cols * channels));
    }
}

Image Image::channel(std::size_t ch) const {
    if (ch >= channels_) {
        throw BoundsError("channel " + std::to_string(ch) + " out of range");
    }
    Image out(rows_, cols_, 1);
    for (std::size_t i = 0; i < rows_ * cols_; ++i) {
        out.values_[i] = values_[i * channels_ + ch];
    }
    return out;
}

Image Image::crop(std::size_t r0, std::size_t c0, std::size_t h, std::size_t w) const {
    if (r0 + h > rows_ || c0 + w > cols_) {
        throw BoundsError("crop rectangle exceeds image bounds");
    }
    Image out(h, w, channels_);
    for (std::size_t r = 0; r < h; ++r) {
        auto src = values_.begin() + static_cast<std::ptrdiff_t>(((r0 + r) * cols_ + c0) * channels_);
        std::copy(src, src + static_cast<std::ptrdiff_t>(w * channels_),
                  out.values_.begin() + static_cast<std::ptrdiff_t>(r * w * channels_));
    }
    return out;
}

Image Image::clamped() const {
    Image out = *this;
    for (double& v : out.values_) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

void require_same_shape(const Image& a, const Image& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw DimensionMismatch(what + ": shapes " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + "x" + std::to_string(a.channels()) +
                                " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                                "x" + std::to_string(b.channels()) + " differ");
    }
}

std::size_t SnowMask::popcount() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), static_cast<unsigned char>(1)));
}

} // namespace snowgt
