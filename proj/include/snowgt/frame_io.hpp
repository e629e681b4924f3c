#pragma once

#include "snowgt/image.hpp"
#include "snowgt/video_tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace snowgt {

// 8-bit file boundary: round(clamp(v) * 255).
std::uint8_t quantize(double v);

// Reads an 8- or 16-bit image as RGB (channels = 3) or luminance
// (channels = 1). channels = 0 keeps the file's own layout (1 or 3).
Image read_image(const std::filesystem::path& file, std::size_t channels = 0);

void write_png(const std::filesystem::path& file, const Image& img);
std::vector<unsigned char> encode_png(const Image& img);
void write_mask_png(const std::filesystem::path& file, const SnowMask& mask);

// Image files directly inside dir, sorted lexicographically by filename.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

// Frame file name for index f: frame_%06d.png.
std::string frame_name(std::size_t f);

VideoTensor load_frames(const std::filesystem::path& dir, std::size_t channels = 0);
void save_frames(const std::filesystem::path& dir, const VideoTensor& video);

struct FrameProbe {
    std::size_t frames = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 0;
};

// Validates a frame directory without keeping pixel data. Same errors as
// load_frames.
FrameProbe probe_frames(const std::filesystem::path& dir);

} // namespace snowgt
