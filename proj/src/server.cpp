#include "snowgt/server.hpp"

#include "snowgt/degradation.hpp"
#include "snowgt/errors.hpp"
#include "snowgt/frame_io.hpp"

#include <httplib.h>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <sys/socket.h>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace snowgt {

namespace {

int http_status(const std::string& code) {
    if (code == "parameter_error" || code == "bounds_error" || code == "dimension_mismatch" ||
        code == "bad_request" || code == "insufficient_frames") {
        return 400;
    }
    if (code == "not_found") {
        return 404;
    }
    if (code == "conflict" || code == "invalid_transition" || code == "nothing_selected") {
        return 409;
    }
    return 500;
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message) {
    res.status = http_status(code);
    res.set_content(json{{"error", message}, {"code", code}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& body) {
    res.status = 200;
    res.set_content(body.dump(), "application/json");
}

void send_png(httplib::Response& res, const Image& img) {
    const std::vector<unsigned char> bytes = encode_png(img);
    res.status = 200;
    res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const json::exception& e) {
            send_error(res, "bad_request", e.what());
        } catch (const std::exception& e) {
            send_error(res, "internal", e.what());
        }
    };
}

std::size_t parse_index(const std::string& text, const char* what) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        throw ParameterError(std::string("invalid ") + what + " '" + text + "'");
    }
    return v;
}

double parse_tau(const httplib::Request& req) {
    if (!req.has_param("tau")) {
        return LossWeights{}.tau;
    }
    const std::string text = req.get_param_value("tau");
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(v) || v < 0.0) {
        throw ParameterError("invalid tau '" + text + "'");
    }
    return v;
}

json parse_body(const httplib::Request& req) {
    json body = req.body.empty() ? json::object() : json::parse(req.body);
    if (!body.is_object()) {
        throw ParameterError("request body must be a JSON object");
    }
    return body;
}

std::string optional_string(const json& body, const char* key) {
    if (!body.contains(key) || body[key].is_null()) {
        return {};
    }
    if (!body[key].is_string()) {
        throw ParameterError(std::string("'") + key + "' must be a string");
    }
    return body[key].get<std::string>();
}

// Snowy frame in grayscale with the binarized residual painted red.
Image residual_overlay(const Image& snowy, const Image& candidate, double tau) {
    const SnowMask mask = binarize(residual(snowy, candidate), tau);
    Image out(snowy.rows(), snowy.cols(), 3);
    for (std::size_t r = 0; r < snowy.rows(); ++r) {
        for (std::size_t c = 0; c < snowy.cols(); ++c) {
            if (mask.at(r, c)) {
                out.at(r, c, 0) = 1.0;
                continue;
            }
            const double gray = snowy.channels() == 3
                                    ? 0.299 * snowy.at(r, c, 0) + 0.587 * snowy.at(r, c, 1) + 0.114 * snowy.at(r, c, 2)
                                    : snowy.at(r, c);
            out.at(r, c, 0) = out.at(r, c, 1) = out.at(r, c, 2) = gray;
        }
    }
    return out;
}

json video_json(const Manifest& m, const VideoEntry& v) {
    json selection = nullptr;
    if (auto it = m.selections.find(v.id); it != m.selections.end()) {
        selection = {{"frame", it->second.frame},
                     {"note", it->second.note},
                     {"params", it->second.tag},
                     {"timestamp", it->second.timestamp}};
    }
    json rejection = nullptr;
    if (auto it = m.rejections.find(v.id); it != m.rejections.end()) {
        rejection = {{"note", it->second}};
    }
    return {{"id", v.id},
            {"frames", v.frames},
            {"resolution", {{"width", v.cols}, {"height", v.rows}}},
            {"channels", v.channels},
            {"status", to_string(m.status(v.id))},
            {"params", m.tags(v.id)},
            {"selection", selection},
            {"rejection", rejection},
            {"parent", v.parent ? json(*v.parent) : json(nullptr)},
            {"quadrant", v.quadrant ? json(*v.quadrant) : json(nullptr)}};
}

} // namespace

std::pair<std::string, int> parse_bind_address(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) {
        throw ParameterError("bind address must be host:port, got '" + text + "'");
    }
    const std::string host = text.substr(0, colon);
    const std::string port_text = text.substr(colon + 1);
    int port = -1;
    const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || end != port_text.data() + port_text.size() || port < 0 || port > 65535) {
        throw ParameterError("invalid port in bind address '" + text + "'");
    }
    return {host, port};
}

struct CurationServer::Impl {
    Dataset& dataset;
    ServerOptions options;
    fs::path export_dir;
    httplib::Server http;
    std::shared_mutex lock;
    std::thread worker;

    Impl(Dataset& d, ServerOptions o) : dataset(d), options(std::move(o)) {
        export_dir = options.export_dir ? *options.export_dir : dataset.root() / "export";
        // httplib enables SO_REUSEPORT by default, which would let a second
        // server bind a busy port silently.
        http.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        routes();
    }

    void routes() {
        http.Get("/api/videos", guarded([this](const httplib::Request&, httplib::Response& res) {
            std::shared_lock guard(lock);
            const Manifest& m = dataset.manifest();
            json out = json::array();
            for (const VideoEntry& v : m.videos) {
                out.push_back(video_json(m, v));
            }
            send_json(res, out);
        }));

        http.Get(R"(/api/videos/([^/]+)/frames/([^/]+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     const std::string id = req.matches[1];
                     const std::size_t n = parse_index(req.matches[2], "frame index");
                     const std::string kind = req.has_param("kind") ? req.get_param_value("kind") : "snowy";
                     const std::string tag = req.get_param_value("params");
                     std::shared_lock guard(lock);
                     if (kind == "snowy") {
                         send_png(res, dataset.snowy_frame(id, n));
                     } else if (kind == "candidate") {
                         send_png(res, dataset.candidate_frame(id, n, tag));
                     } else {
                         throw ParameterError("kind must be snowy or candidate, got '" + kind + "'");
                     }
                 }));

        http.Get(R"(/api/videos/([^/]+)/residual/([^/]+))",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                     const std::string id = req.matches[1];
                     const std::size_t n = parse_index(req.matches[2], "frame index");
                     const double tau = parse_tau(req);
                     const std::string tag = req.get_param_value("params");
                     std::shared_lock guard(lock);
                     const Image snowy = dataset.snowy_frame(id, n);
                     const Image candidate = dataset.candidate_frame(id, n, tag);
                     send_png(res, residual_overlay(snowy, candidate, tau));
                 }));

        http.Post(R"(/api/videos/([^/]+)/selection)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      const std::string id = req.matches[1];
                      const json body = parse_body(req);
                      if (!body.contains("frame") || !body["frame"].is_number_unsigned()) {
                          throw ParameterError("'frame' must be a non-negative integer");
                      }
                      const auto frame = body["frame"].get<std::size_t>();
                      const std::string note = optional_string(body, "note");
                      const std::string tag = optional_string(body, "params");
                      std::unique_lock guard(lock);
                      dataset.record_selection(id, frame, note, tag);
                      send_json(res, {{"ok", true}, {"manifest_revision", dataset.manifest().revision}});
                  }));

        http.Post(R"(/api/videos/([^/]+)/rejection)",
                  guarded([this](const httplib::Request& req, httplib::Response& res) {
                      const std::string id = req.matches[1];
                      const json body = parse_body(req);
                      const std::string note = optional_string(body, "note");
                      std::unique_lock guard(lock);
                      dataset.record_rejection(id, note);
                      send_json(res, {{"ok", true}, {"manifest_revision", dataset.manifest().revision}});
                  }));

        http.Post("/api/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
            parse_body(req);
            std::unique_lock guard(lock);
            const ExportResult result = dataset.export_pairs(export_dir);
            json failures = json::array();
            for (const auto& [video, message] : result.failures) {
                failures.push_back({{"video", video}, {"error", message}});
            }
            send_json(res, {{"pairs", result.pairs.size()},
                            {"report_path", result.report_path.string()},
                            {"failures", failures},
                            {"manifest_revision", dataset.manifest().revision}});
        }));

        if (options.static_dir) {
            if (!http.set_mount_point("/", options.static_dir->string())) {
                throw IoError("static directory " + options.static_dir->string() + " is not readable");
            }
        }

        http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (res.status == 404 && res.body.empty()) {
                send_error(res, "not_found", "no route for " + req.method + " " + req.path);
            }
        });
    }
};

CurationServer::CurationServer(Dataset& dataset, ServerOptions options)
    : impl_(std::make_unique<Impl>(dataset, std::move(options))) {}

CurationServer::~CurationServer() { stop(); }

int CurationServer::bind() {
    const auto& o = impl_->options;
    if (o.port == 0) {
        port_ = impl_->http.bind_to_any_port(o.host);
    } else {
        port_ = impl_->http.bind_to_port(o.host, o.port) ? o.port : -1;
    }
    if (port_ < 0) {
        throw IoError("cannot bind " + o.host + ":" + std::to_string(o.port) + " (address in use or unavailable)");
    }
    return port_;
}

void CurationServer::listen() { impl_->http.listen_after_bind(); }

int CurationServer::start() {
    const int p = bind();
    impl_->worker = std::thread([this] { listen(); });
    impl_->http.wait_until_ready();
    return p;
}

void CurationServer::stop() {
    if (!impl_) {
        return;
    }
    impl_->http.stop();
    if (impl_->worker.joinable()) {
        impl_->worker.join();
    }
}

} // namespace snowgt
