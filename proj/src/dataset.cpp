#include "snowgt/dataset.hpp"

#include "snowgt/errors.hpp"
#include "snowgt/frame_io.hpp"
#include "snowgt/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>

namespace fs = std::filesystem;

namespace snowgt {

namespace {

std::string sanitize_id(const fs::path& dir) {
    fs::path p = dir.lexically_normal();
    std::string name = p.filename().string();
    if (name.empty() || name == "." || name == "..") {
        name = p.parent_path().filename().string();
    }
    for (char& ch : name) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '-' || ch == '_' || ch == '.';
        if (!ok) {
            ch = '_';
        }
    }
    return name.empty() ? std::string("video") : name;
}

std::string pair_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pair_%05zu", index);
    return buf;
}

void insert_sorted(std::vector<VideoEntry>& videos, VideoEntry entry) {
    auto it = std::lower_bound(videos.begin(), videos.end(), entry.id,
                               [](const VideoEntry& v, const std::string& key) { return v.id < key; });
    videos.insert(it, std::move(entry));
}

} // namespace

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Dataset::Dataset(fs::path root, DatasetOptions options)
    : root_(std::move(root)), options_(std::move(options)), store_(root_ / "manifest.json", options_.durable) {
    if (!options_.clock) {
        options_.clock = utc_timestamp;
    }
    options_.weights.validate();
    fs::create_directories(root_);
    if (store_.exists()) {
        manifest_ = store_.load();
    }
}

void Dataset::reload() {
    manifest_ = store_.exists() ? store_.load() : Manifest{};
}

const VideoEntry& Dataset::require_video(const std::string& id) const {
    const VideoEntry* v = manifest_.find_video(id);
    if (v == nullptr) {
        throw NotFoundError("unknown video '" + id + "'");
    }
    return *v;
}

fs::path Dataset::resolve(const std::string& relative) const {
    fs::path p(relative);
    return p.is_absolute() ? p : root_ / p;
}

void Dataset::commit(Manifest next) {
    next.revision = manifest_.revision + 1;
    store_.save(next);
    manifest_ = std::move(next);
}

IngestReport Dataset::ingest(const std::vector<fs::path>& dirs, bool quadrant_split) {
    IngestReport report;
    Manifest next = manifest_;
    for (const fs::path& dir : dirs) {
        const std::string base = sanitize_id(dir);
        FrameProbe probe;
        try {
            probe = probe_frames(dir);
        } catch (const Error& e) {
            report.failures.emplace_back(dir.string(), e.what());
            continue;
        }

        const fs::path absolute = fs::absolute(dir).lexically_normal();
        const fs::path relative = absolute.lexically_relative(fs::absolute(root_).lexically_normal());
        const bool inside = !relative.empty() && *relative.begin() != "..";
        const std::string source = inside ? relative.generic_string() : absolute.generic_string();

        std::vector<VideoEntry> entries;
        if (quadrant_split) {
            if (probe.rows < 4 || probe.cols < 4) {
                report.failures.emplace_back(dir.string(), "quadrant split needs frames of at least 4x4");
                continue;
            }
            const std::size_t top = (probe.rows + 1) / 2;
            const std::size_t left = (probe.cols + 1) / 2;
            const std::size_t heights[4] = {top, top, probe.rows - top, probe.rows - top};
            const std::size_t widths[4] = {left, probe.cols - left, left, probe.cols - left};
            for (int q = 0; q < 4; ++q) {
                entries.push_back({base + "_q" + std::to_string(q), source, probe.frames, heights[q], widths[q],
                                   probe.channels, base, q});
            }
        } else {
            entries.push_back({base, source, probe.frames, probe.rows, probe.cols, probe.channels, std::nullopt,
                               std::nullopt});
        }

        const bool clash = std::any_of(entries.begin(), entries.end(),
                                       [&](const VideoEntry& e) { return next.find_video(e.id) != nullptr; });
        if (clash) {
            report.conflicts.push_back(base);
            continue;
        }
        for (VideoEntry& e : entries) {
            report.added.push_back(e.id);
            insert_sorted(next.videos, std::move(e));
        }
    }
    if (!report.added.empty() || !store_.exists()) {
        commit(std::move(next));
    }
    return report;
}

CandidateReport Dataset::generate_candidates(const std::string& video, const std::vector<CandidateParams>& params) {
    require_video(video);
    const VideoTensor source = load_video(video);
    CandidateReport report;
    Manifest next = manifest_;
    auto& list = next.candidates[video];

    for (const CandidateParams& p : params) {
        const std::string tag = p.tag();
        try {
            DesnowDiagnostics diag;
            const VideoTensor out = desnow_video(source, p.options(), &diag);
            const fs::path rel_dir = fs::path("candidates") / video / tag;
            save_frames(root_ / rel_dir, out);

            std::erase_if(list, [&](const Candidate& c) { return c.tag == tag; });
            for (std::size_t f = 0; f < out.frames(); ++f) {
                list.push_back({f, tag, p, (rel_dir / frame_name(f)).generic_string()});
            }
            report.generated.push_back(tag);
            for (auto& w : diag.warnings) {
                report.warnings.push_back(tag + ": " + w);
            }
        } catch (const Error& e) {
            report.failures.emplace_back(tag, e.what());
        }
    }
    std::sort(list.begin(), list.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.tag, a.frame) < std::tie(b.tag, b.frame);
    });
    if (list.empty()) {
        next.candidates.erase(video);
    }
    if (!report.generated.empty()) {
        commit(std::move(next));
    }
    return report;
}

void Dataset::record_selection(const std::string& video, std::size_t frame, const std::string& note,
                               const std::string& tag) {
    require_video(video);
    const Candidate* c = manifest_.find_candidate(video, frame, tag);
    if (c == nullptr) {
        throw NotFoundError("no candidate for video '" + video + "' frame " + std::to_string(frame) +
                            (tag.empty() ? std::string() : " with parameters " + tag));
    }
    if (manifest_.status(video) == VideoStatus::rejected) {
        throw InvalidTransition("video '" + video + "' was rejected and cannot be selected");
    }
    Manifest next = manifest_;
    next.selections[video] = {frame, c->tag, note, options_.clock()};
    commit(std::move(next));
}

void Dataset::record_rejection(const std::string& video, const std::string& note) {
    require_video(video);
    if (manifest_.status(video) == VideoStatus::selected) {
        throw InvalidTransition("video '" + video + "' already has a selection");
    }
    Manifest next = manifest_;
    next.rejections[video] = note;
    commit(std::move(next));
}

VideoTensor Dataset::load_video(const std::string& video) const {
    const VideoEntry& entry = require_video(video);
    VideoTensor full = load_frames(resolve(entry.source), entry.channels);
    VideoTensor out = entry.quadrant ? split_quadrants(full)[static_cast<std::size_t>(*entry.quadrant)] : std::move(full);
    if (out.rows() != entry.rows || out.cols() != entry.cols || out.frames() != entry.frames) {
        throw DimensionMismatch("frames of video '" + video + "' no longer match the manifest");
    }
    return out;
}

Image Dataset::snowy_frame(const std::string& video, std::size_t frame) const {
    const VideoEntry& entry = require_video(video);
    if (frame >= entry.frames) {
        throw NotFoundError("video '" + video + "' has no frame " + std::to_string(frame));
    }
    const auto files = list_frame_files(resolve(entry.source));
    if (files.size() != entry.frames) {
        throw DimensionMismatch("frame count of video '" + video + "' no longer matches the manifest");
    }
    Image img = read_image(files[frame], entry.channels);
    if (entry.quadrant) {
        img = std::move(split_quadrants(img)[static_cast<std::size_t>(*entry.quadrant)]);
    }
    if (img.rows() != entry.rows || img.cols() != entry.cols) {
        throw DimensionMismatch("frame size of video '" + video + "' no longer matches the manifest");
    }
    return img;
}

Image Dataset::candidate_frame(const std::string& video, std::size_t frame, const std::string& tag) const {
    const VideoEntry& entry = require_video(video);
    const Candidate* c = manifest_.find_candidate(video, frame, tag);
    if (c == nullptr) {
        throw NotFoundError("no candidate for video '" + video + "' frame " + std::to_string(frame));
    }
    return read_image(resolve(c->path), entry.channels);
}

ExportResult Dataset::export_pairs(const fs::path& out_dir) {
    if (manifest_.selections.empty()) {
        throw NothingSelected("nothing selected");
    }
    fs::create_directories(out_dir / "snowy");
    fs::create_directories(out_dir / "gt");

    ExportResult result;
    std::vector<ImageMetrics> rows;
    for (const auto& [video, sel] : manifest_.selections) {
        try {
            const Candidate* c = manifest_.find_candidate(video, sel.frame, sel.tag);
            if (c == nullptr) {
                throw NotFoundError("selected candidate vanished from the manifest");
            }
            const fs::path candidate_file = resolve(c->path);
            if (!fs::exists(candidate_file)) {
                throw IoError("missing candidate file " + candidate_file.string());
            }
            const Image snowy = snowy_frame(video, sel.frame);
            const Image gt = read_image(candidate_file, snowy.channels());
            require_same_shape(snowy, gt, "export pair " + video);

            const std::string pair = pair_id(result.pairs.size());
            const fs::path snowy_rel = fs::path("snowy") / (pair + ".png");
            const fs::path gt_rel = fs::path("gt") / (pair + ".png");
            write_png(out_dir / snowy_rel, snowy);
            write_png(out_dir / gt_rel, gt);

            // Score the files as written so standalone re-evaluation agrees.
            const Image snowy_disk = read_image(out_dir / snowy_rel);
            const Image gt_disk = read_image(out_dir / gt_rel, snowy_disk.channels());
            ImageMetrics m = evaluate_pair(pair, snowy_disk, gt_disk, nullptr, options_.weights);
            result.pairs.push_back({pair, video, sel.frame, sel.tag, snowy_rel.generic_string(),
                                    gt_rel.generic_string(), to_json(m)});
            rows.push_back(std::move(m));
        } catch (const Error& e) {
            result.failures.emplace_back(video, e.what());
        }
    }

    result.report = summarize(std::move(rows), options_.weights);
    nlohmann::json doc = to_json(result.report);
    nlohmann::json pairs = nlohmann::json::array();
    for (const ExportRecord& r : result.pairs) {
        pairs.push_back({{"pair", r.pair}, {"video", r.video}, {"frame", r.frame}, {"params", r.tag}});
    }
    doc["pairs"] = std::move(pairs);
    result.report_path = out_dir / "report.json";
    write_json(result.report_path, doc);

    Manifest next = manifest_;
    next.exports = result.pairs;
    commit(std::move(next));
    return result;
}

} // namespace snowgt
