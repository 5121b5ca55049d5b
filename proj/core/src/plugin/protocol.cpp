#include "tplas/plugin/protocol.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

extern char** environ;

namespace tplas::plugin {

std::vector<std::string> dispatch_findings(const Capabilities& caps, std::size_t context_length,
                                           std::size_t horizon, std::size_t channels) {
    std::vector<std::string> findings;
    if (horizon > caps.max_horizon) {
        findings.push_back("horizon exceeds plugin limit (" + std::to_string(horizon) + " > " +
                           std::to_string(caps.max_horizon) + ")");
    }
    if (context_length > caps.max_context) {
        findings.push_back("context length exceeds plugin limit (" +
                           std::to_string(context_length) + " > " +
                           std::to_string(caps.max_context) + ")");
    }
    if (caps.channels && *caps.channels != channels) {
        findings.push_back("plugin supports exactly " + std::to_string(*caps.channels) +
                           " channels, data has " + std::to_string(channels));
    }
    return findings;
}

std::string encode_request(std::int64_t id, const std::string& cmd, const Json& payload) {
    Json j;
    j["id"] = id;
    j["cmd"] = cmd;
    j["payload"] = payload.is_null() ? Json::object() : payload;
    return j.dump();
}

Reply decode_reply(const std::string& line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& e) {
        throw PluginError(std::string("malformed reply: ") + e.what());
    } catch (const Json::out_of_range& e) {
        // Raised for literals such as 1e999 that overflow a double.
        throw PluginError(std::string("non-finite value in reply: ") + e.what());
    }
    if (!j.is_object()) throw PluginError("malformed reply: not a JSON object");
    if (!j.contains("id") || !j["id"].is_number_integer()) {
        throw PluginError("malformed reply: missing integer id");
    }
    if (!j.contains("ok") || !j["ok"].is_boolean()) {
        throw PluginError("malformed reply: missing boolean ok");
    }
    Reply r;
    r.id = j["id"].get<std::int64_t>();
    r.ok = j["ok"].get<bool>();
    if (r.ok) {
        if (!j.contains("payload") || !j["payload"].is_object()) {
            throw PluginError("malformed reply: ok reply without object payload");
        }
        r.payload = j["payload"];
    } else {
        r.error = j.contains("error") && j["error"].is_string() ? j["error"].get<std::string>()
                                                                : std::string("(no error text)");
    }
    return r;
}

Json encode_batch(std::span<const MatrixView> items) {
    const std::size_t rows = items.empty() ? 0 : items.front().rows();
    const std::size_t cols = items.empty() ? 0 : items.front().cols();
    std::vector<double> data;
    data.reserve(items.size() * rows * cols);
    for (const auto& m : items) {
        if (m.rows() != rows || m.cols() != cols) {
            throw PluginError("encode_batch: items differ in shape");
        }
        data.insert(data.end(), m.flat().begin(), m.flat().end());
    }
    Json j;
    j["shape"] = {items.size(), rows, cols};
    j["data"] = std::move(data);
    return j;
}

std::vector<Matrix> decode_batch(const Json& array) {
    if (!array.is_object() || !array.contains("shape") || !array.contains("data")) {
        throw PluginError("array must be an object with shape and data");
    }
    const auto& shape = array["shape"];
    const auto& data = array["data"];
    if (!shape.is_array() || shape.size() != 3 || !data.is_array()) {
        throw PluginError("array shape must be [batch, rows, cols]");
    }
    for (const auto& d : shape) {
        if (!d.is_number_unsigned() && !(d.is_number_integer() && d.get<std::int64_t>() >= 0)) {
            throw PluginError("array shape entries must be non-negative integers");
        }
    }
    const auto b = shape[0].get<std::size_t>();
    const auto r = shape[1].get<std::size_t>();
    const auto c = shape[2].get<std::size_t>();
    if (data.size() != b * r * c) {
        throw PluginError("array holds " + std::to_string(data.size()) + " values, shape needs " +
                          std::to_string(b * r * c));
    }
    std::vector<Matrix> out;
    out.reserve(b);
    std::size_t k = 0;
    for (std::size_t i = 0; i < b; ++i) {
        Matrix m(r, c);
        for (std::size_t e = 0; e < r * c; ++e, ++k) {
            const auto& v = data[k];
            if (!v.is_number()) throw PluginError("array data must be numeric");
            const double x = v.get<double>();
            if (!std::isfinite(x)) throw PluginError("non-finite value in reply array");
            m.data()[e] = x;
        }
        out.push_back(std::move(m));
    }
    return out;
}

Json encode_capabilities(const Capabilities& caps) {
    Json j;
    j["trainable"] = caps.trainable;
    j["max_horizon"] = caps.max_horizon;
    j["max_context"] = caps.max_context;
    if (caps.channels) {
        j["channels"] = *caps.channels;
    } else {
        j["channels"] = "any";
    }
    return j;
}

Capabilities decode_capabilities(const Json& j) {
    try {
        Capabilities caps;
        caps.trainable = j.at("trainable").get<bool>();
        caps.max_horizon = j.at("max_horizon").get<std::size_t>();
        caps.max_context = j.at("max_context").get<std::size_t>();
        const auto& ch = j.at("channels");
        if (ch.is_string()) {
            if (ch.get<std::string>() != "any") throw PluginError("channels must be \"any\" or an integer");
        } else {
            caps.channels = ch.get<std::size_t>();
        }
        return caps;
    } catch (const Json::exception& e) {
        throw PluginError(std::string("malformed capabilities: ") + e.what());
    }
}

PluginSession::PluginSession(const PluginDescriptor& descriptor)
    : timeout_(descriptor.message_timeout) {
    if (descriptor.command.empty()) throw PluginError("plugin command is empty");

    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
        throw PluginError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    char tmpl[] = "/tmp/tplas-plugin-stderr-XXXXXX";
    const int err_fd = ::mkstemp(tmpl);
    if (err_fd < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw PluginError("cannot create stderr capture file");
    }
    stderr_path_ = tmpl;

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, sv[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, sv[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err_fd, STDERR_FILENO);

    std::vector<char*> argv;
    for (const auto& a : descriptor.command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(sv[1]);
    ::close(err_fd);
    if (rc != 0) {
        ::close(sv[0]);
        std::remove(stderr_path_.c_str());
        throw PluginError("cannot spawn plugin '" + descriptor.command.front() +
                          "': " + std::strerror(rc));
    }
    pid_ = pid;
    fd_ = sv[0];
    ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);

    Json hello;
    hello["protocol_version"] = kProtocolVersion;
    const auto saved = timeout_;
    timeout_ = descriptor.handshake_timeout;
    Json reply;
    try {
        reply = call("handshake", hello);
    } catch (...) {
        timeout_ = saved;
        terminate();
        throw;
    }
    timeout_ = saved;
    try {
        version_ = reply.at("protocol_version").get<int>();
    } catch (const Json::exception&) {
        fail("handshake reply lacks an integer protocol_version");
    }
    if (version_ != kProtocolVersion) {
        fail("protocol version mismatch: plugin speaks " + std::to_string(version_) +
             ", harness speaks " + std::to_string(kProtocolVersion));
    }
    if (!reply.contains("capabilities")) fail("handshake reply lacks capabilities");
    try {
        caps_ = decode_capabilities(reply["capabilities"]);
    } catch (const PluginError& e) {
        fail(e.what());
    }
}

PluginSession::~PluginSession() {
    try {
        shutdown();
    } catch (...) {
        terminate();
    }
    if (!stderr_path_.empty()) std::remove(stderr_path_.c_str());
}

PluginSession::PluginSession(PluginSession&& other) noexcept
    : pid_(std::exchange(other.pid_, -1)),
      fd_(std::exchange(other.fd_, -1)),
      stderr_path_(std::exchange(other.stderr_path_, {})),
      buffer_(std::move(other.buffer_)),
      next_id_(other.next_id_),
      timeout_(other.timeout_),
      caps_(other.caps_),
      version_(other.version_) {}

PluginSession& PluginSession::operator=(PluginSession&& other) noexcept {
    if (this != &other) {
        terminate();
        if (!stderr_path_.empty()) std::remove(stderr_path_.c_str());
        pid_ = std::exchange(other.pid_, -1);
        fd_ = std::exchange(other.fd_, -1);
        stderr_path_ = std::exchange(other.stderr_path_, {});
        buffer_ = std::move(other.buffer_);
        next_id_ = other.next_id_;
        timeout_ = other.timeout_;
        caps_ = other.caps_;
        version_ = other.version_;
    }
    return *this;
}

std::string PluginSession::stderr_text() const {
    if (stderr_path_.empty()) return {};
    std::ifstream in(stderr_path_, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void PluginSession::terminate() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void PluginSession::fail(const std::string& what) {
    terminate();
    std::string msg = "plugin: " + what;
    const auto err = stderr_text();
    if (!err.empty()) msg += "\n--- plugin stderr ---\n" + err;
    throw PluginError(msg);
}

void PluginSession::write_line(const std::string& line, std::chrono::milliseconds timeout) {
    if (fd_ < 0) throw PluginError("plugin session is closed");
    const std::string framed = line + "\n";
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::size_t sent = 0;
    while (sent < framed.size()) {
        const ssize_t n = ::send(fd_, framed.data() + sent, framed.size() - sent, MSG_NOSIGNAL);
        if (n > 0) {
            sent += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
            fail(std::string("write failed (process died?): ") + std::strerror(errno));
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) fail("timeout writing request");
        pollfd pfd{fd_, POLLOUT, 0};
        ::poll(&pfd, 1, static_cast<int>(left.count()));
    }
}

std::string PluginSession::read_line(std::chrono::milliseconds timeout) {
    if (fd_ < 0) throw PluginError("plugin session is closed");
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) fail("timeout after " + std::to_string(timeout.count()) + " ms waiting for reply");
        pollfd pfd{fd_, POLLIN, 0};
        const int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (pr < 0 && errno != EINTR) fail(std::string("poll failed: ") + std::strerror(errno));
        if (pr <= 0) continue;
        char chunk[65536];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n > 0) {
            buffer_.append(chunk, static_cast<std::size_t>(n));
        } else if (n == 0) {
            // Give the process a moment to exit so its status and stderr are complete.
            int status = 0;
            for (int i = 0; i < 50 && ::waitpid(pid_, &status, WNOHANG) == 0; ++i) {
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            fail("process closed its output (exited or crashed)");
        } else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
            fail(std::string("read failed: ") + std::strerror(errno));
        }
    }
}

std::string PluginSession::exchange_raw(const std::string& line) {
    write_line(line, timeout_);
    return read_line(timeout_);
}

Json PluginSession::call(const std::string& cmd, const Json& payload) {
    const std::int64_t id = next_id_++;
    write_line(encode_request(id, cmd, payload), timeout_);
    const std::string line = read_line(timeout_);
    Reply reply;
    try {
        reply = decode_reply(line);
    } catch (const PluginError& e) {
        fail(e.what());
    }
    if (reply.id != id) {
        fail("reply id " + std::to_string(reply.id) + " does not match request id " +
             std::to_string(id));
    }
    if (!reply.ok) throw PluginError("plugin rejected " + cmd + ": " + reply.error);
    return reply.payload;
}

std::vector<Matrix> PluginSession::predict(std::span<const MatrixView> contexts,
                                           std::size_t horizon) {
    if (contexts.empty()) return {};
    if (const auto f = dispatch_findings(caps_, contexts.front().rows(), horizon,
                                         contexts.front().cols());
        !f.empty()) {
        throw PluginError("refusing dispatch: " + f.front());
    }
    Json payload;
    payload["context"] = encode_batch(contexts);
    payload["horizon"] = horizon;
    const Json reply = call("predict", payload);
    if (!reply.contains("forecast")) fail("predict reply lacks forecast");
    std::vector<Matrix> out;
    try {
        out = decode_batch(reply["forecast"]);
    } catch (const PluginError& e) {
        fail(e.what());
    }
    if (out.size() != contexts.size()) {
        fail("predict returned " + std::to_string(out.size()) + " forecasts for " +
             std::to_string(contexts.size()) + " contexts");
    }
    for (const auto& m : out) {
        if (m.rows() != horizon || m.cols() != contexts.front().cols()) {
            fail("predict returned a forecast of the wrong shape");
        }
    }
    return out;
}

void PluginSession::finetune(std::span<const data::Sample> windows,
                             const training::TrainConfig& cfg, std::size_t chunk) {
    if (!caps_.trainable) throw PluginError("plugin is not trainable");
    if (chunk < 1) chunk = 1;
    const std::size_t chunks = (windows.size() + chunk - 1) / chunk;
    Json config;
    config["epochs"] = cfg.epochs;
    config["batch_size"] = cfg.batch_size;
    config["lr"] = cfg.lr;
    config["seed"] = cfg.seed;
    for (std::size_t i = 0; i < chunks; ++i) {
        const auto part = windows.subspan(i * chunk, std::min(chunk, windows.size() - i * chunk));
        std::vector<MatrixView> ctx;
        std::vector<MatrixView> tgt;
        for (const auto& s : part) {
            ctx.push_back(s.context);
            tgt.push_back(s.target);
        }
        Json payload;
        payload["context"] = encode_batch(ctx);
        payload["target"] = encode_batch(tgt);
        payload["config"] = config;
        payload["chunk"] = i;
        payload["chunks"] = chunks;
        call("finetune", payload);
    }
}

std::string PluginSession::snapshot(const std::string& label) {
    Json payload;
    payload["label"] = label;
    const Json reply = call("snapshot", payload);
    if (!reply.contains("token") || !reply["token"].is_string()) {
        fail("snapshot reply lacks a string token");
    }
    return reply["token"].get<std::string>();
}

void PluginSession::restore(const std::string& token) {
    Json payload;
    payload["token"] = token;
    call("restore", payload);
}

void PluginSession::shutdown() {
    if (pid_ <= 0) return;
    try {
        call("shutdown", Json::object());
    } catch (const PluginError&) {
        terminate();
        return;
    }
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    int status = 0;
    for (int i = 0; i < 200; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
            pid_ = -1;
            return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    terminate();
}

}  // namespace tplas::plugin
