#include "snowgt/frame_io.hpp"

#include "snowgt/errors.hpp"

#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace fs = std::filesystem;

namespace snowgt {

namespace {

constexpr std::array<std::string_view, 9> kImageExtensions = {".png", ".pgm", ".ppm", ".pnm", ".bmp",
                                                              ".jpg", ".jpeg", ".tif", ".tiff"};

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return std::find(kImageExtensions.begin(), kImageExtensions.end(), ext) != kImageExtensions.end();
}

cv::Mat to_mat(const Image& img) {
    if (img.channels() != 1 && img.channels() != 3) {
        throw ParameterError("only 1- or 3-channel images can be encoded");
    }
    const int type = img.channels() == 1 ? CV_8UC1 : CV_8UC3;
    cv::Mat mat(static_cast<int>(img.rows()), static_cast<int>(img.cols()), type);
    for (std::size_t r = 0; r < img.rows(); ++r) {
        auto* row = mat.ptr<std::uint8_t>(static_cast<int>(r));
        for (std::size_t c = 0; c < img.cols(); ++c) {
            if (img.channels() == 1) {
                row[c] = quantize(img.at(r, c));
            } else {
                // OpenCV stores BGR.
                row[3 * c + 0] = quantize(img.at(r, c, 2));
                row[3 * c + 1] = quantize(img.at(r, c, 1));
                row[3 * c + 2] = quantize(img.at(r, c, 0));
            }
        }
    }
    return mat;
}

} // namespace

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

Image read_image(const fs::path& file, std::size_t channels) {
    if (channels != 0 && channels != 1 && channels != 3) {
        throw ParameterError("channels must be 1 or 3");
    }
    cv::Mat mat = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
    if (mat.empty()) {
        throw IoError("cannot read image " + file.string());
    }
    // Divide rather than multiply by the reciprocal so code/255 is exact.
    double full_scale = 0.0;
    switch (mat.depth()) {
    case CV_8U:
        full_scale = 255.0;
        break;
    case CV_16U:
        full_scale = 65535.0;
        break;
    default:
        throw IoError("unsupported bit depth in " + file.string());
    }
    const int file_channels = mat.channels();
    if (file_channels != 1 && file_channels != 3 && file_channels != 4) {
        throw IoError("unsupported channel count in " + file.string());
    }
    cv::Mat wide;
    mat.convertTo(wide, CV_MAKETYPE(CV_64F, file_channels));

    const std::size_t rows = static_cast<std::size_t>(wide.rows);
    const std::size_t cols = static_cast<std::size_t>(wide.cols);
    const std::size_t native = file_channels == 1 ? 1 : 3;
    const std::size_t out_ch = channels == 0 ? native : channels;
    Image img(rows, cols, out_ch);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = wide.ptr<double>(static_cast<int>(r));
        for (std::size_t c = 0; c < cols; ++c) {
            const double* px = row + c * static_cast<std::size_t>(file_channels);
            if (native == 1) {
                for (std::size_t k = 0; k < out_ch; ++k) {
                    img.at(r, c, k) = px[0] / full_scale;
                }
                continue;
            }
            const double red = px[2] / full_scale;
            const double green = px[1] / full_scale;
            const double blue = px[0] / full_scale;
            if (out_ch == 3) {
                img.at(r, c, 0) = red;
                img.at(r, c, 1) = green;
                img.at(r, c, 2) = blue;
            } else {
                img.at(r, c) = 0.299 * red + 0.587 * green + 0.114 * blue;
            }
        }
    }
    return img;
}

void write_png(const fs::path& file, const Image& img) {
    if (!cv::imwrite(file.string(), to_mat(img))) {
        throw IoError("cannot write image " + file.string());
    }
}

std::vector<unsigned char> encode_png(const Image& img) {
    std::vector<unsigned char> bytes;
    if (!cv::imencode(".png", to_mat(img), bytes)) {
        throw IoError("PNG encoding failed");
    }
    return bytes;
}

void write_mask_png(const fs::path& file, const SnowMask& mask) {
    cv::Mat mat(static_cast<int>(mask.rows), static_cast<int>(mask.cols), CV_8UC1);
    for (std::size_t r = 0; r < mask.rows; ++r) {
        auto* row = mat.ptr<std::uint8_t>(static_cast<int>(r));
        for (std::size_t c = 0; c < mask.cols; ++c) {
            row[c] = mask.at(r, c) ? 255 : 0;
        }
    }
    if (!cv::imwrite(file.string(), mat)) {
        throw IoError("cannot write mask " + file.string());
    }
}

std::vector<fs::path> list_frame_files(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw IoError("not a frame directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) {
            files.push_back(entry.path());
        }
    }
    if (ec) {
        throw IoError("cannot list " + dir.string() + ": " + ec.message());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

std::string frame_name(std::size_t f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06zu.png", f);
    return buf;
}

VideoTensor load_frames(const fs::path& dir, std::size_t channels) {
    const auto files = list_frame_files(dir);
    if (files.size() < 2) {
        throw InsufficientFrames(dir.string() + " holds " + std::to_string(files.size()) +
                                 " frame(s), at least 2 are required");
    }
    std::vector<Image> frames;
    frames.reserve(files.size());
    for (const auto& file : files) {
        Image img = read_image(file, channels);
        if (channels == 0 && !frames.empty()) {
            // Auto mode follows the first file's layout.
            channels = frames.front().channels();
            if (img.channels() != channels) {
                img = read_image(file, channels);
            }
        }
        if (!frames.empty() && (img.rows() != frames.front().rows() || img.cols() != frames.front().cols())) {
            throw DimensionMismatch(file.filename().string() + " is " + std::to_string(img.rows()) + "x" +
                                    std::to_string(img.cols()) + ", expected " +
                                    std::to_string(frames.front().rows()) + "x" +
                                    std::to_string(frames.front().cols()));
        }
        frames.push_back(std::move(img));
    }
    return VideoTensor::from_frames(frames);
}

void save_frames(const fs::path& dir, const VideoTensor& video) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    for (std::size_t f = 0; f < video.frames(); ++f) {
        write_png(dir / frame_name(f), video.frame(f));
    }
}

FrameProbe probe_frames(const fs::path& dir) {
    const auto files = list_frame_files(dir);
    if (files.size() < 2) {
        throw InsufficientFrames(dir.string() + " holds " + std::to_string(files.size()) +
                                 " frame(s), at least 2 are required");
    }
    FrameProbe probe;
    probe.frames = files.size();
    for (const auto& file : files) {
        cv::Mat mat = cv::imread(file.string(), cv::IMREAD_UNCHANGED);
        if (mat.empty()) {
            throw IoError("cannot read image " + file.string());
        }
        const auto rows = static_cast<std::size_t>(mat.rows);
        const auto cols = static_cast<std::size_t>(mat.cols);
        if (probe.rows == 0) {
            probe.rows = rows;
            probe.cols = cols;
            probe.channels = mat.channels() == 1 ? 1 : 3;
        } else if (rows != probe.rows || cols != probe.cols) {
            throw DimensionMismatch(file.filename().string() + " is " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + ", expected " + std::to_string(probe.rows) + "x" +
                                    std::to_string(probe.cols));
        }
    }
    if (probe.rows < 2 || probe.cols < 2) {
        throw DimensionMismatch("frames in " + dir.string() + " are smaller than 2x2");
    }
    return probe;
}

} // namespace snowgt
