#pragma once

#include "snowgt/image.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace snowgt {

// Dense m x n x k video with c channels, values in [0,1].
//
// Storage is planar per channel and frame: ((ch * k + f) * m + r) * n + col.
// A tensor is immutable once constructed; every operation returns a new one.
class VideoTensor {
public:
    VideoTensor() = default;

    // Takes ownership of `values` laid out as described above. Values are
    // clamped to [0,1]; non-finite values and dimensions below 2 are rejected.
    VideoTensor(std::size_t rows, std::size_t cols, std::size_t frames, std::size_t channels,
                std::vector<double> values);

    // All frames must share rows, cols and channel count.
    static VideoTensor from_frames(std::span<const Image> frames);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t frames() const noexcept { return frames_; }
    std::size_t channels() const noexcept { return channels_; }

    std::size_t offset(std::size_t r, std::size_t c, std::size_t f, std::size_t ch) const noexcept {
        return ((ch * frames_ + f) * rows_ + r) * cols_ + c;
    }
    double at(std::size_t r, std::size_t c, std::size_t f, std::size_t ch = 0) const noexcept {
        return values_[offset(r, c, f, ch)];
    }

    std::span<const double> values() const noexcept { return values_; }

    Image frame(std::size_t f) const;
    std::vector<Image> to_frames() const;

    friend bool operator==(const VideoTensor&, const VideoTensor&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t frames_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> values_;
};

enum class SliceMode { horizontal, lateral, frontal };

std::string_view to_string(SliceMode mode);
SliceMode parse_slice_mode(std::string_view text);

// A copied 2-D section of a tensor.
//   horizontal (index = row i):    k x n, matrix(f, col) = t(i, col, f)
//   lateral    (index = column j): k x m, matrix(f, row) = t(row, j, f)
//   frontal    (index = frame f):  m x n, matrix(row, col) = t(row, col, f)
struct SliceView {
    SliceMode mode = SliceMode::horizontal;
    std::size_t index = 0;
    std::size_t channel = 0;
    Eigen::MatrixXd matrix;
};

// Number of slices available for a mode (m, n or k).
std::size_t slice_count(const VideoTensor& t, SliceMode mode);

SliceView extract_slice(const VideoTensor& t, SliceMode mode, std::size_t index, std::size_t channel);

// Returns a copy of t with the slice's entries overwritten (clamped to [0,1]).
VideoTensor replace_slice(const VideoTensor& t, const SliceView& s);

// Writes a slice into a raw buffer laid out like t.values(). Used to assemble
// many slices without copying the whole tensor per slice.
void write_slice(const VideoTensor& layout, std::span<double> buffer, const SliceView& s);

// Quadrant order: top-left, top-right, bottom-left, bottom-right. Odd extents
// give the extra row to the top pair and the extra column to the left pair.
std::array<Image, 4> split_quadrants(const Image& frame);
Image join_quadrants(const std::array<Image, 4>& quads);

// Splits every frame and returns the four quadrant videos in the same order.
std::array<VideoTensor, 4> split_quadrants(const VideoTensor& t);

} // namespace snowgt
