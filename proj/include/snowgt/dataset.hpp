#pragma once

#include "snowgt/manifest.hpp"
#include "snowgt/metrics.hpp"
#include "snowgt/video_tensor.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace snowgt {

struct DatasetOptions {
    // Produces selection timestamps; defaults to UTC ISO-8601 wall-clock time.
    std::function<std::string()> clock;
    // fsync manifest writes.
    bool durable = true;
    LossWeights weights{};
};

struct IngestReport {
    std::vector<std::string> added;
    std::vector<std::string> conflicts;  // ids that already existed
    std::vector<std::pair<std::string, std::string>> failures;  // path, message
};

struct CandidateReport {
    std::vector<std::string> generated;  // tags
    std::vector<std::pair<std::string, std::string>> failures;  // tag, message
    std::vector<std::string> warnings;
};

struct ExportResult {
    std::vector<ExportRecord> pairs;
    std::vector<std::pair<std::string, std::string>> failures;  // video, message
    std::filesystem::path report_path;
    MetricsReport report;
};

/// Dataset rooted at a directory holding manifest.json and candidates/.
///
/// Every mutation builds the next manifest, persists it atomically and only
/// then replaces the in-memory copy, so a failed write leaves both unchanged.
/// Not thread-safe; the curation server serialises access.
class Dataset {
public:
    explicit Dataset(std::filesystem::path root, DatasetOptions options = {});

    const std::filesystem::path& root() const noexcept { return root_; }
    const Manifest& manifest() const noexcept { return manifest_; }
    ManifestStore& store() noexcept { return store_; }

    // Re-reads manifest.json from disk.
    void reload();

    IngestReport ingest(const std::vector<std::filesystem::path>& dirs, bool quadrant_split);
    CandidateReport generate_candidates(const std::string& video, const std::vector<CandidateParams>& params);
    void record_selection(const std::string& video, std::size_t frame, const std::string& note,
                          const std::string& tag = {});
    void record_rejection(const std::string& video, const std::string& note);
    ExportResult export_pairs(const std::filesystem::path& out_dir);

    // Frames as stored on disk (quadrant children are cropped from the parent).
    VideoTensor load_video(const std::string& video) const;
    Image snowy_frame(const std::string& video, std::size_t frame) const;
    Image candidate_frame(const std::string& video, std::size_t frame, const std::string& tag = {}) const;

private:
    const VideoEntry& require_video(const std::string& id) const;
    std::filesystem::path resolve(const std::string& relative) const;
    void commit(Manifest next);

    std::filesystem::path root_;
    DatasetOptions options_;
    ManifestStore store_;
    Manifest manifest_;
};

std::string utc_timestamp();

} // namespace snowgt
