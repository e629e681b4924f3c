#include "snowgt/manifest.hpp"

#include "snowgt/errors.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <tuple>

namespace fs = std::filesystem;
using nlohmann::json;

namespace snowgt {

namespace {

std::string tag_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

json params_to_json(const CandidateParams& p) {
    json q;
    if (p.q_rule.kind == QRule::Kind::energy) {
        q = {{"kind", "energy"}, {"fraction", p.q_rule.fraction}};
    } else {
        q = {{"kind", "fixed"}, {"rank", p.q_rule.fixed_rank}};
    }
    return {{"mode", std::string(to_string(p.mode))},
            {"q_rule", q},
            {"band_low", p.band.low},
            {"band_high", p.band.high},
            {"drop_noise", p.drop_noise}};
}

CandidateParams params_from_json(const json& j) {
    CandidateParams p;
    p.mode = parse_slice_mode(j.at("mode").get<std::string>());
    const json& q = j.at("q_rule");
    const auto kind = q.at("kind").get<std::string>();
    if (kind == "energy") {
        p.q_rule = QRule::energy(q.at("fraction").get<double>());
    } else if (kind == "fixed") {
        p.q_rule = QRule::fixed(q.at("rank").get<std::size_t>());
    } else {
        throw ParameterError("unknown q rule kind '" + kind + "' in manifest");
    }
    p.band = {j.at("band_low").get<double>(), j.at("band_high").get<double>()};
    p.band.validate();
    p.drop_noise = j.at("drop_noise").get<bool>();
    return p;
}

void write_all(int fd, const char* data, std::size_t size, const fs::path& file) {
    while (size > 0) {
        const ssize_t n = ::write(fd, data, size);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw IoError("write to " + file.string() + " failed: " + std::strerror(errno));
        }
        data += n;
        size -= static_cast<std::size_t>(n);
    }
}

// Closes the descriptor on every exit path.
struct FileDescriptor {
    int fd = -1;
    ~FileDescriptor() {
        if (fd >= 0) {
            ::close(fd);
        }
    }
};

} // namespace

std::string CandidateParams::tag() const {
    std::string out(to_string(mode));
    if (q_rule.kind == QRule::Kind::energy) {
        out += "_energy-" + tag_number(q_rule.fraction);
    } else {
        out += "_fixed-" + std::to_string(q_rule.fixed_rank);
    }
    out += "_band-" + tag_number(band.low) + "-" + tag_number(band.high);
    if (drop_noise) {
        out += "_dropnoise";
    }
    return out;
}

DesnowOptions CandidateParams::options() const {
    DesnowOptions o;
    o.mode = mode;
    o.q_rule = q_rule;
    o.band = band;
    o.drop_noise = drop_noise;
    return o;
}

CandidateParams CandidateParams::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        parts.push_back(item);
    }
    if (parts.size() < 3 || parts.size() > 4) {
        throw ParameterError("parameter set must look like MODE,QRULE,LOW:HIGH[,drop-noise], got '" + text + "'");
    }
    CandidateParams p;
    p.mode = parse_slice_mode(parts[0]);
    if (p.mode == SliceMode::frontal) {
        throw ParameterError("candidate generation needs horizontal or lateral slices");
    }
    p.q_rule = QRule::parse(parts[1]);
    p.band = BandpassSpec::parse(parts[2]);
    if (parts.size() == 4) {
        if (parts[3] != "drop-noise") {
            throw ParameterError("unknown parameter flag '" + parts[3] + "'");
        }
        p.drop_noise = true;
    }
    return p;
}

std::string_view to_string(VideoStatus status) {
    switch (status) {
    case VideoStatus::pending:
        return "pending";
    case VideoStatus::selected:
        return "selected";
    case VideoStatus::rejected:
        return "rejected";
    }
    return "pending";
}

const VideoEntry* Manifest::find_video(const std::string& id) const {
    auto it = std::lower_bound(videos.begin(), videos.end(), id,
                               [](const VideoEntry& v, const std::string& key) { return v.id < key; });
    return it != videos.end() && it->id == id ? &*it : nullptr;
}

const Candidate* Manifest::find_candidate(const std::string& id, std::size_t frame, const std::string& tag) const {
    auto it = candidates.find(id);
    if (it == candidates.end()) {
        return nullptr;
    }
    for (const Candidate& c : it->second) {
        if (c.frame == frame && (tag.empty() || c.tag == tag)) {
            return &c;
        }
    }
    return nullptr;
}

const Candidate* Manifest::find_candidate(const std::string& id, std::size_t frame) const {
    return find_candidate(id, frame, std::string{});
}

VideoStatus Manifest::status(const std::string& id) const {
    if (selections.count(id) != 0) {
        return VideoStatus::selected;
    }
    if (rejections.count(id) != 0) {
        return VideoStatus::rejected;
    }
    return VideoStatus::pending;
}

std::vector<std::string> Manifest::tags(const std::string& id) const {
    std::set<std::string> out;
    if (auto it = candidates.find(id); it != candidates.end()) {
        for (const Candidate& c : it->second) {
            out.insert(c.tag);
        }
    }
    return {out.begin(), out.end()};
}

json to_json(const Manifest& m) {
    json videos = json::array();
    for (const VideoEntry& v : m.videos) {
        json e = {{"id", v.id},         {"source", v.source}, {"frames", v.frames},
                  {"rows", v.rows},     {"cols", v.cols},     {"channels", v.channels}};
        if (v.parent) {
            e["parent"] = *v.parent;
        }
        if (v.quadrant) {
            e["quadrant"] = *v.quadrant;
        }
        videos.push_back(std::move(e));
    }
    json candidates = json::object();
    for (const auto& [id, list] : m.candidates) {
        json arr = json::array();
        for (const Candidate& c : list) {
            arr.push_back({{"frame", c.frame}, {"tag", c.tag}, {"params", params_to_json(c.params)}, {"path", c.path}});
        }
        candidates[id] = std::move(arr);
    }
    json selections = json::object();
    for (const auto& [id, s] : m.selections) {
        selections[id] = {{"frame", s.frame}, {"tag", s.tag}, {"note", s.note}, {"timestamp", s.timestamp}};
    }
    json rejections = json::object();
    for (const auto& [id, note] : m.rejections) {
        rejections[id] = note;
    }
    json exports = json::array();
    for (const ExportRecord& e : m.exports) {
        exports.push_back({{"pair", e.pair},
                           {"video", e.video},
                           {"frame", e.frame},
                           {"tag", e.tag},
                           {"snowy", e.snowy},
                           {"gt", e.gt},
                           {"metrics", e.metrics}});
    }
    return {{"version", m.version},       {"revision", m.revision},     {"videos", videos},
            {"candidates", candidates},   {"selections", selections},   {"rejections", rejections},
            {"exports", exports}};
}

Manifest manifest_from_json(const json& doc) {
    try {
        Manifest m;
        m.version = doc.at("version").get<std::string>();
        if (m.version != kManifestVersion) {
            throw ParameterError("unsupported manifest version '" + m.version + "'");
        }
        m.revision = doc.at("revision").get<std::uint64_t>();
        for (const json& e : doc.at("videos")) {
            VideoEntry v;
            v.id = e.at("id").get<std::string>();
            v.source = e.at("source").get<std::string>();
            v.frames = e.at("frames").get<std::size_t>();
            v.rows = e.at("rows").get<std::size_t>();
            v.cols = e.at("cols").get<std::size_t>();
            v.channels = e.at("channels").get<std::size_t>();
            if (e.contains("parent")) {
                v.parent = e.at("parent").get<std::string>();
            }
            if (e.contains("quadrant")) {
                v.quadrant = e.at("quadrant").get<int>();
            }
            m.videos.push_back(std::move(v));
        }
        std::sort(m.videos.begin(), m.videos.end(),
                  [](const VideoEntry& a, const VideoEntry& b) { return a.id < b.id; });
        for (const auto& [id, arr] : doc.at("candidates").items()) {
            auto& list = m.candidates[id];
            for (const json& c : arr) {
                list.push_back({c.at("frame").get<std::size_t>(), c.at("tag").get<std::string>(),
                                params_from_json(c.at("params")), c.at("path").get<std::string>()});
            }
        }
        for (const auto& [id, s] : doc.at("selections").items()) {
            m.selections[id] = {s.at("frame").get<std::size_t>(), s.at("tag").get<std::string>(),
                                s.at("note").get<std::string>(), s.at("timestamp").get<std::string>()};
        }
        for (const auto& [id, note] : doc.at("rejections").items()) {
            m.rejections[id] = note.get<std::string>();
        }
        for (const json& e : doc.at("exports")) {
            m.exports.push_back({e.at("pair").get<std::string>(), e.at("video").get<std::string>(),
                                 e.at("frame").get<std::size_t>(), e.at("tag").get<std::string>(),
                                 e.at("snowy").get<std::string>(), e.at("gt").get<std::string>(), e.at("metrics")});
        }
        return m;
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed manifest: ") + e.what());
    }
}

std::string serialize(const Manifest& manifest) {
    return to_json(manifest).dump(2) + "\n";
}

Manifest parse_manifest(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("manifest is not valid JSON: ") + e.what());
    }
    return manifest_from_json(doc);
}

std::vector<std::string> integrity_violations(const Manifest& m) {
    std::vector<std::string> out;
    if (m.version != kManifestVersion) {
        out.push_back("unexpected version " + m.version);
    }
    for (std::size_t i = 1; i < m.videos.size(); ++i) {
        if (!(m.videos[i - 1].id < m.videos[i].id)) {
            out.push_back("video ids not unique and sorted at " + m.videos[i].id);
        }
    }
    for (const auto& [id, list] : m.candidates) {
        const VideoEntry* v = m.find_video(id);
        if (v == nullptr) {
            out.push_back("candidates for unknown video " + id);
            continue;
        }
        for (const Candidate& c : list) {
            if (c.frame >= v->frames) {
                out.push_back("candidate frame " + std::to_string(c.frame) + " beyond video " + id);
            }
            if (c.tag != c.params.tag()) {
                out.push_back("candidate tag " + c.tag + " does not match its parameters");
            }
        }
    }
    for (const auto& [id, s] : m.selections) {
        if (m.find_candidate(id, s.frame, s.tag) == nullptr) {
            out.push_back("selection for " + id + " frame " + std::to_string(s.frame) + " has no candidate");
        }
        if (m.rejections.count(id) != 0) {
            out.push_back("video " + id + " is both selected and rejected");
        }
    }
    for (const auto& [id, note] : m.rejections) {
        if (m.find_video(id) == nullptr) {
            out.push_back("rejection for unknown video " + id);
        }
    }
    std::set<std::string> pairs;
    for (const ExportRecord& e : m.exports) {
        if (m.selections.count(e.video) == 0) {
            out.push_back("export " + e.pair + " references video " + e.video + " without a selection");
        }
        if (!pairs.insert(e.pair).second) {
            out.push_back("duplicate export pair id " + e.pair);
        }
    }
    return out;
}

ManifestStore::ManifestStore(fs::path file, bool durable) : file_(std::move(file)), durable_(durable) {}

bool ManifestStore::exists() const {
    std::error_code ec;
    return fs::exists(file_, ec);
}

Manifest ManifestStore::load() const {
    std::ifstream in(file_, std::ios::binary);
    if (!in) {
        throw IoError("cannot open manifest " + file_.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

void ManifestStore::stage(std::string_view name) const {
    if (fault_hook_) {
        fault_hook_(name);
    }
}

void ManifestStore::save(const Manifest& manifest) const {
    const std::string text = serialize(manifest);
    const fs::path tmp = file_.string() + ".tmp";
    if (file_.has_parent_path()) {
        fs::create_directories(file_.parent_path());
    }

    stage("create");
    FileDescriptor out{::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644)};
    if (out.fd < 0) {
        throw IoError("cannot create " + tmp.string() + ": " + std::strerror(errno));
    }
    const std::size_t half = text.size() / 2;
    write_all(out.fd, text.data(), half, tmp);
    stage("write");
    write_all(out.fd, text.data() + half, text.size() - half, tmp);
    stage("sync");
    if (durable_ && ::fsync(out.fd) != 0) {
        throw IoError("fsync of " + tmp.string() + " failed: " + std::strerror(errno));
    }
    stage("rename");
    if (::rename(tmp.c_str(), file_.c_str()) != 0) {
        throw IoError("cannot replace " + file_.string() + ": " + std::strerror(errno));
    }
    if (durable_) {
        const fs::path dir = file_.has_parent_path() ? file_.parent_path() : fs::path(".");
        FileDescriptor d{::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC)};
        if (d.fd >= 0) {
            ::fsync(d.fd);
        }
    }
}

} // namespace snowgt
