#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace snowgt {

// Dense real image, channel-interleaved, row-major. Values are nominally in
// [0,1] but signed images (residuals) use the same container.
class Image {
public:
    Image() = default;
    Image(std::size_t rows, std::size_t cols, std::size_t channels = 1, double fill = 0.0);
    Image(std::size_t rows, std::size_t cols, std::size_t channels, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& at(std::size_t r, std::size_t c, std::size_t ch = 0) {
        return values_[(r * cols_ + c) * channels_ + ch];
    }
    double at(std::size_t r, std::size_t c, std::size_t ch = 0) const {
        return values_[(r * cols_ + c) * channels_ + ch];
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool same_shape(const Image& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_ && channels_ == other.channels_;
    }

    // Single-channel copy of channel ch.
    Image channel(std::size_t ch) const;

    // Copy of the rectangle [r0, r0+h) x [c0, c0+w).
    Image crop(std::size_t r0, std::size_t c0, std::size_t h, std::size_t w) const;

    Image clamped() const;

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t channels_ = 1;
    std::vector<double> values_;
};

// Throws DimensionMismatch naming `what` when the shapes differ.
void require_same_shape(const Image& a, const Image& b, const std::string& what);

// Binary mask; 1 marks a snow/rain pixel.
struct SnowMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<unsigned char> bits;
    double threshold = 0.0;

    SnowMask() = default;
    SnowMask(std::size_t r, std::size_t c, double tau = 0.0)
        : rows(r), cols(c), bits(r * c, 0), threshold(tau) {}

    unsigned char& at(std::size_t r, std::size_t c) { return bits[r * cols + c]; }
    unsigned char at(std::size_t r, std::size_t c) const { return bits[r * cols + c]; }

    std::size_t popcount() const;
};

} // namespace snowgt
