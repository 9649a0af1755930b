#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace figac::service {

struct ServiceOptions {
    std::filesystem::path data_dir = "figac-data";
};

/// HTTP front end for interactive segmentation jobs. Slices and jobs are persisted
/// under `data_dir` and reloaded on construction; interrupted runs come back paused.
class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Blocks serving requests until stop() is called.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and returns it; call listen_after_bind() to serve.
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace figac::service
