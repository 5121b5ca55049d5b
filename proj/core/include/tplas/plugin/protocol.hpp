#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tplas/core/matrix.hpp"
#include "tplas/data/window.hpp"
#include "tplas/training/trainer.hpp"

namespace tplas::plugin {

inline constexpr int kProtocolVersion = 1;

/// Any protocol violation, timeout or process failure. Poisons the session that raised it.
class PluginError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Capabilities {
    bool trainable = false;
    std::size_t max_horizon = 0;
    std::size_t max_context = 0;
    std::optional<std::size_t> channels;  // nullopt: any channel count

    bool operator==(const Capabilities&) const = default;
};

struct PluginDescriptor {
    std::vector<std::string> command;  // executable followed by its arguments
    std::optional<Capabilities> declared;
    std::chrono::milliseconds handshake_timeout{10'000};
    std::chrono::milliseconds message_timeout{10'000};
};

/// Reasons the runner must refuse to dispatch (l, h, C) to a plugin. Empty means allowed.
std::vector<std::string> dispatch_findings(const Capabilities& caps, std::size_t context_length,
                                           std::size_t horizon, std::size_t channels);

// Wire format: one UTF-8 JSON document per line.
//   request {"id":int,"cmd":"handshake|predict|finetune|snapshot|restore|shutdown","payload":{...}}
//   reply   {"id":int,"ok":bool,"payload":{...}} or {"id":int,"ok":false,"error":str}
//   arrays  {"shape":[...],"data":[...]}
using Json = nlohmann::ordered_json;

std::string encode_request(std::int64_t id, const std::string& cmd, const Json& payload);

struct Reply {
    std::int64_t id = 0;
    bool ok = false;
    Json payload;
    std::string error;
};

/// Throws PluginError on anything that is not a well-formed reply line.
Reply decode_reply(const std::string& line);

/// Stacks same-shaped matrices into {"shape":[B,rows,cols],"data":[...]}.
Json encode_batch(std::span<const MatrixView> items);
/// Inverse of encode_batch; rejects bad shapes, short data and non-finite values.
std::vector<Matrix> decode_batch(const Json& array);

Json encode_capabilities(const Capabilities& caps);
Capabilities decode_capabilities(const Json& j);

/// A live plugin process speaking the protocol over its standard input/output.
/// Single-threaded: one request in flight, replies matched to requests by id.
class PluginSession {
public:
    /// Spawns the process and performs the handshake. Fails closed: on a version mismatch
    /// or malformed reply the process is terminated and PluginError thrown.
    explicit PluginSession(const PluginDescriptor& descriptor);
    ~PluginSession();

    PluginSession(const PluginSession&) = delete;
    PluginSession& operator=(const PluginSession&) = delete;
    PluginSession(PluginSession&& other) noexcept;
    PluginSession& operator=(PluginSession&& other) noexcept;

    const Capabilities& capabilities() const { return caps_; }
    int negotiated_version() const { return version_; }

    std::vector<Matrix> predict(std::span<const MatrixView> contexts, std::size_t horizon);
    /// Streams `windows` in chunks of at most `chunk` windows, each acknowledged.
    void finetune(std::span<const data::Sample> windows, const training::TrainConfig& cfg,
                  std::size_t chunk = 256);
    std::string snapshot(const std::string& label);
    void restore(const std::string& token);
    /// Sends shutdown and reaps the process. Idempotent.
    void shutdown();

    /// Raw request/reply exchange; exposed for conformance testing.
    Json call(const std::string& cmd, const Json& payload);
    /// Sends `line` verbatim and returns the next reply line.
    std::string exchange_raw(const std::string& line);

    /// Everything the process wrote to stderr so far.
    std::string stderr_text() const;
    bool alive() const { return pid_ > 0; }

private:
    void write_line(const std::string& line, std::chrono::milliseconds timeout);
    std::string read_line(std::chrono::milliseconds timeout);
    [[noreturn]] void fail(const std::string& what);
    void terminate();

    int pid_ = -1;
    int fd_ = -1;
    std::string stderr_path_;
    std::string buffer_;
    std::int64_t next_id_ = 0;
    std::chrono::milliseconds timeout_{10'000};
    Capabilities caps_;
    int version_ = 0;
};

}  // namespace tplas::plugin
