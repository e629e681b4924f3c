#pragma once

#include "snowgt/dataset.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace snowgt {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8641;  // 0 picks a free port
    std::optional<std::filesystem::path> static_dir;
    // Defaults to <dataset root>/export.
    std::optional<std::filesystem::path> export_dir;
};

// "host:port" -> (host, port). Throws ParameterError.
std::pair<std::string, int> parse_bind_address(const std::string& text);

/// Curation HTTP API over a Dataset.
///
///   GET  /api/videos
///   GET  /api/videos/{id}/frames/{n}?kind=snowy|candidate&params={tag}
///   GET  /api/videos/{id}/residual/{n}?tau=0.05&params={tag}
///   POST /api/videos/{id}/selection  {frame, note, params?}
///   POST /api/videos/{id}/rejection  {note}
///   POST /api/export                 {}
///
/// Readers share a lock; every mutation holds it exclusively until the
/// manifest is on disk, so responses are only sent for durable state.
class CurationServer {
public:
    CurationServer(Dataset& dataset, ServerOptions options);
    ~CurationServer();

    CurationServer(const CurationServer&) = delete;
    CurationServer& operator=(const CurationServer&) = delete;

    // Binds the socket; throws IoError when the address is unavailable.
    // Returns the bound port.
    int bind();
    // Serves on the bound socket until stop(); blocks.
    void listen();
    // bind() followed by listen() on a background thread.
    int start();
    void stop();

    int port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = -1;
};

} // namespace snowgt
