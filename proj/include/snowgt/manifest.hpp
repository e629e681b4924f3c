#pragma once

#include "snowgt/lowrank.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace snowgt {

inline constexpr std::string_view kManifestVersion = "snowgt-manifest/1";

struct VideoEntry {
    std::string id;
    std::string source;  // frame directory, relative to the dataset root when inside it
    std::size_t frames = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 0;
    std::optional<std::string> parent;  // quadrant lineage
    std::optional<int> quadrant;        // 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right

    friend bool operator==(const VideoEntry&, const VideoEntry&) = default;
};

struct CandidateParams {
    SliceMode mode = SliceMode::horizontal;
    QRule q_rule = QRule::energy(0.999);
    BandpassSpec band{};
    bool drop_noise = false;

    // URL- and path-safe identifier, e.g. horizontal_energy-0.999_band-0-0.1.
    std::string tag() const;
    DesnowOptions options() const;

    // "horizontal,energy:0.999,0:0.1[,drop-noise]".
    static CandidateParams parse(const std::string& text);
};

struct Candidate {
    std::size_t frame = 0;
    std::string tag;
    CandidateParams params;
    std::string path;  // relative to the dataset root
};

struct Selection {
    std::size_t frame = 0;
    std::string tag;
    std::string note;
    std::string timestamp;
};

struct ExportRecord {
    std::string pair;
    std::string video;
    std::size_t frame = 0;
    std::string tag;
    std::string snowy;  // paths relative to the export directory
    std::string gt;
    nlohmann::json metrics;
};

enum class VideoStatus { pending, selected, rejected };
std::string_view to_string(VideoStatus status);

struct Manifest {
    std::string version{kManifestVersion};
    std::uint64_t revision = 0;
    std::vector<VideoEntry> videos;  // kept sorted by id
    std::map<std::string, std::vector<Candidate>> candidates;
    std::map<std::string, Selection> selections;
    std::map<std::string, std::string> rejections;  // id -> note
    std::vector<ExportRecord> exports;

    const VideoEntry* find_video(const std::string& id) const;
    const Candidate* find_candidate(const std::string& id, std::size_t frame, const std::string& tag) const;
    // First candidate for the frame in tag order when tag is empty.
    const Candidate* find_candidate(const std::string& id, std::size_t frame) const;
    VideoStatus status(const std::string& id) const;
    // Distinct candidate tags for a video, sorted.
    std::vector<std::string> tags(const std::string& id) const;
};

nlohmann::json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& doc);

// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string serialize(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);

// Referential-integrity violations; empty when the manifest is consistent.
std::vector<std::string> integrity_violations(const Manifest& manifest);

// Atomic file persistence: write a sibling temp file, fsync, rename over the
// target, fsync the directory. A crash leaves either the old or new file.
class ManifestStore {
public:
    // Invoked at "create", "write", "sync" and "rename"; a throwing hook
    // simulates a crash at that point.
    using FaultHook = std::function<void(std::string_view stage)>;

    explicit ManifestStore(std::filesystem::path file, bool durable = true);

    const std::filesystem::path& path() const noexcept { return file_; }
    bool exists() const;
    Manifest load() const;
    void save(const Manifest& manifest) const;

    void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

private:
    void stage(std::string_view name) const;

    std::filesystem::path file_;
    bool durable_;
    FaultHook fault_hook_;
};

} // namespace snowgt
