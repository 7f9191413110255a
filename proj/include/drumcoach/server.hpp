#pragma once

// Live gateway: one TCP port speaks three dialects, told apart by the first bytes.
//   - raw NDJSON wire protocol (machines, replay clients)
//   - HTTP GET /session with a WebSocket upgrade (same payloads, one message per text frame)
//   - HTTP GET of anything else: static files from ui_dir
// One session thread owns SessionState; readers, the ticker and the replay thread only
// enqueue. Broadcast never blocks: each subscriber has its own buffer and writer thread.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "drumcoach/config.hpp"
#include "drumcoach/error.hpp"
#include "drumcoach/replay.hpp"
#include "drumcoach/session.hpp"
#include "drumcoach/wire.hpp"

namespace drumcoach::net {

// ---- small socket helpers -----------------------------------------------------

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 7420;
};

inline Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorKind::Config, "listen address must be host:port, got " + text);
    Endpoint e;
    e.host = text.substr(0, colon);
    if (e.host.empty()) e.host = "0.0.0.0";
    try {
        const long p = std::stol(text.substr(colon + 1));
        if (p < 0 || p > 65535) throw std::out_of_range("port");
        e.port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "bad port in " + text);
    }
    return e;
}

inline bool send_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

inline std::string base64(const unsigned char* data, std::size_t n) {
    std::string out(4 * ((n + 2) / 3), '\0');
    const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data, static_cast<int>(n));
    out.resize(static_cast<std::size_t>(len));
    return out;
}

/// Sec-WebSocket-Accept for a client key.
inline std::string ws_accept(const std::string& key) {
    const std::string src = key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_Digest(src.data(), src.size(), md.data(), &len, EVP_sha1(), nullptr);
    return base64(md.data(), len);
}

/// Server-to-client frames are never masked; client frames always are.
inline std::string ws_frame(std::string_view payload, std::uint8_t opcode = 0x1, const unsigned char* mask = nullptr) {
    std::string f;
    f.push_back(static_cast<char>(0x80 | opcode));
    const std::uint8_t mbit = mask != nullptr ? 0x80 : 0x00;
    const auto n = payload.size();
    if (n < 126) {
        f.push_back(static_cast<char>(mbit | n));
    } else if (n <= 0xFFFF) {
        f.push_back(static_cast<char>(mbit | 126));
        f.push_back(static_cast<char>((n >> 8) & 0xFF));
        f.push_back(static_cast<char>(n & 0xFF));
    } else {
        f.push_back(static_cast<char>(mbit | 127));
        for (int i = 7; i >= 0; --i) f.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xFF));
    }
    if (mask == nullptr) {
        f.append(payload);
        return f;
    }
    f.append(reinterpret_cast<const char*>(mask), 4);
    for (std::size_t i = 0; i < n; ++i) f.push_back(static_cast<char>(payload[i] ^ static_cast<char>(mask[i % 4])));
    return f;
}

struct WsFrame {
    bool fin = true;
    std::uint8_t opcode = 0;
    std::string payload;
};

/// Pops one complete frame off the front of `buf`, or nullopt if more bytes are needed.
inline std::optional<WsFrame> ws_take(std::string& buf) {
    if (buf.size() < 2) return std::nullopt;
    const auto b0 = static_cast<unsigned char>(buf[0]);
    const auto b1 = static_cast<unsigned char>(buf[1]);
    std::size_t pos = 2;
    std::uint64_t len = b1 & 0x7F;
    if (len == 126) {
        if (buf.size() < 4) return std::nullopt;
        len = (static_cast<std::uint64_t>(static_cast<unsigned char>(buf[2])) << 8) | static_cast<unsigned char>(buf[3]);
        pos = 4;
    } else if (len == 127) {
        if (buf.size() < 10) return std::nullopt;
        len = 0;
        for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<unsigned char>(buf[2 + i]);
        pos = 10;
    }
    const bool masked = (b1 & 0x80) != 0;
    unsigned char mask[4] = {0, 0, 0, 0};
    if (masked) {
        if (buf.size() < pos + 4) return std::nullopt;
        std::memcpy(mask, buf.data() + pos, 4);
        pos += 4;
    }
    if (buf.size() < pos + len) return std::nullopt;
    WsFrame f;
    f.fin = (b0 & 0x80) != 0;
    f.opcode = b0 & 0x0F;
    f.payload = buf.substr(pos, len);
    if (masked) {
        for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] = static_cast<char>(f.payload[i] ^ mask[i % 4]);
    }
    buf.erase(0, pos + len);
    return f;
}

inline std::string header_value(const std::string& head, std::string_view name) {
    std::istringstream in(head);
    std::string line;
    while (std::getline(in, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos || colon != name.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < colon; ++i) {
            if (std::tolower(static_cast<unsigned char>(line[i])) != std::tolower(static_cast<unsigned char>(name[i]))) {
                same = false;
                break;
            }
        }
        if (!same) continue;
        auto v = line.substr(colon + 1);
        while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.erase(0, 1);
        while (!v.empty() && (v.back() == '\r' || v.back() == ' ')) v.pop_back();
        return v;
    }
    return {};
}

inline std::string_view content_type(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".ogg") return "audio/ogg";
    return "application/octet-stream";
}

inline std::string http_response(int status, std::string_view reason, std::string_view type, const std::string& body) {
    std::string r = "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason) + "\r\n";
    r += "Content-Type: " + std::string(type) + "\r\n";
    r += "Content-Length: " + std::to_string(body.size()) + "\r\n";
    r += "Connection: close\r\n\r\n";
    r += body;
    return r;
}

// ---- server -------------------------------------------------------------------

struct ServerStats {
    std::vector<double> latency_us;  // frame ingress -> ScoreUpdate queued for every subscriber
    std::size_t slow_disconnects = 0;
    std::size_t connections = 0;
    std::size_t frames = 0;
    std::size_t errors_sent = 0;
};

class Server {
public:
    using Clock = std::chrono::steady_clock;

    Server(const Catalog& catalog, EngineConfig cfg, CueLibrary cues, std::uint64_t seed)
        : cfg_(std::move(cfg)), ctx_(catalog, cfg_.scoring, cfg_.session, cfg_.audio) {
        validate(cfg_);
        ProgressStore progress;
        if (!cfg_.progress_dir.empty()) progress = load_progress(cfg_.progress_dir, cfg_.session.participant_id);
        state_ = make_session(ctx_, std::move(progress), std::move(cues), seed);
    }

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;
    ~Server() { stop(); }

    /// Called on the session thread for every event it consumes (tests use it).
    void on_event(std::function<void(const SessionEvent&)> fn) { observer_ = std::move(fn); }

    void start() {
        bind_listener();
        epoch_ = Clock::now();
        running_ = true;
        session_thread_ = std::thread([this] { session_loop(); });
        ticker_thread_ = std::thread([this] { ticker_loop(); });
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    void stop() {
        if (!running_.exchange(false)) return;
        {
            std::lock_guard lk(queue_mu_);
            queue_.push_back(StopLoop{});
        }
        queue_cv_.notify_all();
        tick_cv_.notify_all();
        if (accept_thread_.joinable()) accept_thread_.join();
        if (ticker_thread_.joinable()) ticker_thread_.join();
        if (session_thread_.joinable()) session_thread_.join();
        stop_replay();
        std::list<std::shared_ptr<Connection>> all;
        {
            std::lock_guard lk(conns_mu_);
            all.swap(conns_);
        }
        for (auto& c : all) c->close_now();
        for (auto& c : all) c->join();
        if (listen_fd_ >= 0) ::close(listen_fd_);
        listen_fd_ = -1;
    }

    std::uint16_t port() const { return port_; }

    ServerStats stats() const {
        std::lock_guard lk(stats_mu_);
        return stats_;
    }

    /// Milliseconds on the session clock.
    std::int64_t now_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - epoch_).count();
    }

private:
    struct Connection {
        int fd = -1;
        bool ws = false;
        bool hello = false;
        std::size_t max_out = 0;
        std::mutex mu;
        std::condition_variable cv;
        std::string out;
        std::size_t inflight = 0;
        bool closing = false;
        bool flush_then_close = false;
        std::atomic<bool> reader_done{false};
        std::atomic<bool> writer_done{false};
        std::thread reader;
        std::thread writer;

        /// Queues bytes; false (and shut down) once the backlog passes the limit.
        bool push(std::string_view data) {
            std::lock_guard lk(mu);
            if (closing || flush_then_close) return true;
            out.append(data);
            if (out.size() + inflight > max_out) {
                closing = true;
                out.clear();
                ::shutdown(fd, SHUT_RDWR);
                cv.notify_all();
                return false;
            }
            cv.notify_all();
            return true;
        }

        void close_after_flush() {
            std::lock_guard lk(mu);
            flush_then_close = true;
            cv.notify_all();
        }

        void close_now() {
            std::lock_guard lk(mu);
            closing = true;
            ::shutdown(fd, SHUT_RDWR);
            cv.notify_all();
        }

        void join() {
            if (reader.joinable()) reader.join();
            if (writer.joinable()) writer.join();
            if (fd >= 0) ::close(fd);
            fd = -1;
        }
    };

    struct Incoming {
        SessionEvent event;
        Clock::time_point ingress;
    };
    struct SnapshotRequest {
        std::shared_ptr<Connection> conn;
    };
    struct StopLoop {};
    using Item = std::variant<Incoming, SnapshotRequest, wire::ReplayStart, wire::ReplayStop, StopLoop>;

    // ---- queue --------------------------------------------------------------

    void enqueue(Item item) {
        {
            std::lock_guard lk(queue_mu_);
            // Session time is assigned here, under the queue lock, so queue order and
            // clock order agree.
            if (auto* in = std::get_if<Incoming>(&item)) {
                std::visit(
                    [this](auto& e) {
                        using T = std::decay_t<decltype(e)>;
                        if constexpr (std::is_same_v<T, event::FrameIn>) e.frame.t_ms = now_ms();
                        if constexpr (std::is_same_v<T, event::Tick>) e.now_ms = now_ms();
                    },
                    in->event);
            }
            queue_.push_back(std::move(item));
        }
        queue_cv_.notify_one();
    }

    // ---- listener -----------------------------------------------------------

    void bind_listener() {
        const auto ep = parse_endpoint(cfg_.listen);
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        hints.ai_flags = AI_PASSIVE;
        addrinfo* res = nullptr;
        const auto port_text = std::to_string(ep.port);
        if (::getaddrinfo(ep.host.c_str(), port_text.c_str(), &hints, &res) != 0 || res == nullptr) {
            throw Error(ErrorKind::Bind, "cannot resolve " + cfg_.listen);
        }
        listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        const int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        const bool ok = listen_fd_ >= 0 && ::bind(listen_fd_, res->ai_addr, res->ai_addrlen) == 0 &&
                        ::listen(listen_fd_, 64) == 0;
        ::freeaddrinfo(res);
        if (!ok) {
            const std::string why = std::strerror(errno);
            if (listen_fd_ >= 0) ::close(listen_fd_);
            listen_fd_ = -1;
            throw Error(ErrorKind::Bind, cfg_.listen + ": " + why);
        }
        sockaddr_in bound{};
        socklen_t len = sizeof bound;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
        port_ = ntohs(bound.sin_port);
    }

    void accept_loop() {
        while (running_) {
            pollfd p{listen_fd_, POLLIN, 0};
            if (::poll(&p, 1, 50) <= 0) {
                reap();
                continue;
            }
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd < 0) continue;
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            // Keep the kernel's share of a stalled peer's backlog small; the rest counts
            // against max_outbound_bytes.
            const int sndbuf = 256 * 1024;
            ::setsockopt(fd, SOL_SOCKET, SO_SNDBUF, &sndbuf, sizeof sndbuf);

            auto conn = std::make_shared<Connection>();
            conn->fd = fd;
            conn->max_out = cfg_.max_outbound_bytes;
            {
                std::lock_guard lk(conns_mu_);
                conns_.push_back(conn);
            }
            {
                std::lock_guard lk(stats_mu_);
                stats_.connections += 1;
            }
            conn->writer = std::thread([conn] { writer_loop(*conn); });
            conn->reader = std::thread([this, conn] { reader_loop(conn); });
            reap();
        }
    }

    void reap() {
        std::list<std::shared_ptr<Connection>> dead;
        {
            std::lock_guard lk(conns_mu_);
            for (auto it = conns_.begin(); it != conns_.end();) {
                if ((*it)->reader_done && (*it)->writer_done) {
                    dead.push_back(*it);
                    it = conns_.erase(it);
                } else {
                    ++it;
                }
            }
        }
        for (auto& c : dead) c->join();
    }

    // ---- per-connection I/O ---------------------------------------------------

    static void writer_loop(Connection& c) {
        std::string chunk;
        for (;;) {
            {
                std::unique_lock lk(c.mu);
                c.inflight = 0;
                c.cv.wait(lk, [&] { return c.closing || !c.out.empty() || c.flush_then_close; });
                if (c.closing) break;
                if (c.out.empty() && c.flush_then_close) {
                    ::shutdown(c.fd, SHUT_RDWR);
                    break;
                }
                const auto n = std::min<std::size_t>(c.out.size(), 64 * 1024);
                chunk.assign(c.out, 0, n);
                c.out.erase(0, n);
                c.inflight = n;
            }
            if (!send_all(c.fd, chunk)) {
                std::lock_guard lk(c.mu);
                c.closing = true;
                ::shutdown(c.fd, SHUT_RDWR);
                break;
            }
        }
        c.writer_done = true;
    }

    void reader_loop(std::shared_ptr<Connection> conn) {
        std::string buf;
        std::array<char, 16 * 1024> chunk{};
        bool decided = false;
        bool http = false;
        bool discarding = false;  // inside an over-long raw line
        std::string ws_message;

        auto read_more = [&]() -> bool {
            const auto n = ::recv(conn->fd, chunk.data(), chunk.size(), 0);
            if (n <= 0) return false;
            buf.append(chunk.data(), static_cast<std::size_t>(n));
            return true;
        };

        while (read_more()) {
            if (!decided) {
                if (buf.size() < 4) continue;
                http = buf.compare(0, 4, "GET ") == 0 || buf.compare(0, 4, "HEAD") == 0;
                decided = true;
            }
            if (http && !conn->ws) {
                const auto end = buf.find("\r\n\r\n");
                if (end == std::string::npos) {
                    if (buf.size() > 16 * 1024) break;
                    continue;
                }
                const std::string head = buf.substr(0, end + 2);
                buf.erase(0, end + 4);
                if (!handle_http(conn, head)) break;
                continue;
            }
            if (conn->ws) {
                bool closed = false;
                while (auto f = ws_take(buf)) {
                    if (f->opcode == 0x8) {
                        conn->push(ws_frame({}, 0x8));
                        conn->close_after_flush();
                        closed = true;
                        break;
                    }
                    if (f->opcode == 0x9) {
                        conn->push(ws_frame(f->payload, 0xA));
                        continue;
                    }
                    if (f->opcode == 0xA) continue;
                    ws_message += f->payload;
                    if (ws_message.size() > 16 * wire::kMaxLineBytes) {
                        closed = true;
                        break;
                    }
                    if (!f->fin) continue;
                    // A text frame carries one message; tolerate several newline-joined ones.
                    std::string_view all(ws_message);
                    while (!all.empty()) {
                        const auto nl = all.find('\n');
                        const auto line = all.substr(0, nl);
                        if (!line.empty() && !handle_line(conn, line)) closed = true;
                        if (nl == std::string_view::npos) break;
                        all.remove_prefix(nl + 1);
                    }
                    ws_message.clear();
                    if (closed) break;
                }
                if (closed) break;
                continue;
            }
            // raw NDJSON
            bool closed = false;
            std::size_t start = 0;
            for (;;) {
                const auto nl = buf.find('\n', start);
                if (nl == std::string::npos) break;
                if (discarding) {
                    discarding = false;
                } else {
                    std::string_view line(buf.data() + start, nl - start);
                    if (!line.empty() && line != "\r" && !handle_line(conn, line)) {
                        closed = true;
                        break;
                    }
                }
                start = nl + 1;
            }
            buf.erase(0, start);
            if (closed) break;
            if (buf.size() > wire::kMaxLineBytes) {
                if (!discarding) {
                    reply_error(*conn, "frame_too_large", "line exceeds 64 KiB");
                    discarding = true;
                }
                buf.clear();
            }
        }
        {
            std::lock_guard lk(subs_mu_);
            subs_.erase(std::remove(subs_.begin(), subs_.end(), conn), subs_.end());
        }
        {
            std::lock_guard lk(conn->mu);
            if (!conn->flush_then_close) conn->closing = true;
            conn->cv.notify_all();
        }
        conn->reader_done = true;
    }

    bool handle_http(const std::shared_ptr<Connection>& conn, const std::string& head) {
        const auto line_end = head.find("\r\n");
        std::istringstream first(head.substr(0, line_end));
        std::string method, target;
        first >> method >> target;
        if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);

        if (target == "/session") {
            const auto key = header_value(head, "Sec-WebSocket-Key");
            auto upgrade = header_value(head, "Upgrade");
            std::transform(upgrade.begin(), upgrade.end(), upgrade.begin(),
                           [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
            if (key.empty() || upgrade != "websocket") {
                conn->push(http_response(426, "Upgrade Required", "text/plain", "websocket upgrade required\n"));
                conn->close_after_flush();
                return false;
            }
            conn->push("HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                       "Sec-WebSocket-Accept: " +
                       ws_accept(key) + "\r\n\r\n");
            conn->ws = true;
            return true;
        }

        std::string rel = target == "/" ? "index.html" : target.substr(1);
        std::string body;
        int status = 404;
        std::filesystem::path file = std::filesystem::path(cfg_.ui_dir) / rel;
        if (rel.find("..") == std::string::npos && std::filesystem::is_regular_file(file)) {
            std::ifstream in(file, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            body = ss.str();
            status = 200;
        }
        if (status == 200) {
            conn->push(http_response(200, "OK", content_type(file), method == "HEAD" ? std::string{} : body));
        } else {
            conn->push(http_response(404, "Not Found", "text/plain", "not found\n"));
        }
        conn->close_after_flush();
        return false;
    }

    void send_message(Connection& c, const wire::Message& m) {
        auto line = wire::encode(m);
        if (c.ws) {
            line.pop_back();
            line = ws_frame(line);
        }
        if (!c.push(line)) {
            std::lock_guard lk(stats_mu_);
            stats_.slow_disconnects += 1;
        }
    }

    void reply_error(Connection& c, std::string code, std::string detail) {
        send_message(c, wire::ErrorMsg{std::move(code), std::move(detail)});
        std::lock_guard lk(stats_mu_);
        stats_.errors_sent += 1;
    }

    /// false closes the connection.
    bool handle_line(const std::shared_ptr<Connection>& conn, std::string_view line) {
        const auto ingress = Clock::now();
        wire::Message msg;
        try {
            msg = wire::decode(line);
        } catch (const Error& e) {
            reply_error(*conn, e.kind() == ErrorKind::FrameTooLarge ? "frame_too_large" : "malformed_line", e.what());
            return true;
        }
        if (!conn->hello) {
            const auto* hello = std::get_if<wire::Hello>(&msg);
            if (hello == nullptr) {
                reply_error(*conn, "hello_required", "the first message must be hello");
                conn->close_after_flush();
                return false;
            }
            if (hello->format_version != kFormatVersion || hello->joint_set != kJointSet) {
                reply_error(*conn, "version_mismatch",
                            "server speaks format_version " + std::to_string(kFormatVersion) + ", joint_set " + kJointSet);
                conn->close_after_flush();
                return false;
            }
            conn->hello = true;
            send_message(*conn, wire::Hello{});
            enqueue(SnapshotRequest{conn});
            return true;
        }
        return std::visit(
            [&](auto& m) -> bool {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, wire::Hello>) {
                    reply_error(*conn, "duplicate_hello", "hello already received");
                } else if constexpr (std::is_same_v<T, wire::Frame>) {
                    enqueue(Incoming{event::FrameIn{std::move(m.frame)}, ingress});
                } else if constexpr (std::is_same_v<T, wire::Command>) {
                    std::visit(
                        [&](auto& cmd) {
                            using C = std::decay_t<decltype(cmd)>;
                            if constexpr (std::is_same_v<C, wire::ReplayStart> || std::is_same_v<C, wire::ReplayStop>) {
                                enqueue(cmd);
                            } else {
                                enqueue(Incoming{SessionEvent{cmd}, ingress});
                            }
                        },
                        m.body);
                } else if constexpr (std::is_same_v<T, wire::Output>) {
                    reply_error(*conn, "unexpected_kind", "clients do not send outputs");
                } else {
                    reply_error(*conn, m.code, m.detail);
                }
                return true;
            },
            msg);
    }

    // ---- session side -------------------------------------------------------

    void broadcast(const wire::Message& m) {
        std::lock_guard lk(subs_mu_);
        for (auto& c : subs_) send_message(*c, m);
    }

    wire::Snapshot snapshot() const {
        wire::Snapshot s;
        s.phase = state_.phase;
        s.participant_id = state_.participant_id;
        s.character_id = state_.character_id;
        s.challenge_id = state_.challenge_id;
        s.audience = state_.audience.mode;
        for (const auto& ch : ctx_.catalog->challenges()) {
            wire::ChallengeStatus st;
            st.id = ch.challenge_id;
            st.title = ch.title;
            st.order_index = ch.order_index;
            if (const auto it = state_.progress.entries.find(ch.challenge_id); it != state_.progress.entries.end()) {
                st.unlocked = it->second.unlocked;
                st.best_score = it->second.best_score;
            }
            s.challenges.push_back(std::move(st));
        }
        return s;
    }

    void session_loop() {
        for (;;) {
            Item item;
            {
                std::unique_lock lk(queue_mu_);
                queue_cv_.wait(lk, [&] { return !queue_.empty(); });
                item = std::move(queue_.front());
                queue_.pop_front();
            }
            if (std::holds_alternative<StopLoop>(item)) return;

            if (auto* req = std::get_if<SnapshotRequest>(&item)) {
                // Subscribe and snapshot in one step so nothing falls between them.
                std::lock_guard lk(subs_mu_);
                send_message(*req->conn, wire::Output{snapshot()});
                subs_.push_back(req->conn);
                continue;
            }
            if (auto* rs = std::get_if<wire::ReplayStart>(&item)) {
                if (ctx_.references.count(rs->challenge_id) == 0) {
                    broadcast(wire::ErrorMsg{"unknown_challenge", rs->challenge_id});
                } else {
                    start_replay(*rs);
                }
                continue;
            }
            if (std::holds_alternative<wire::ReplayStop>(item)) {
                stop_replay();
                continue;
            }

            auto& in = std::get<Incoming>(item);
            if (observer_) observer_(in.event);
            Outputs outs;
            try {
                outs = step(state_, ctx_, in.event);
            } catch (const std::exception& e) {
                broadcast(wire::ErrorMsg{"session_error", e.what()});
                continue;
            }
            bool scored = false;
            bool results = false;
            for (auto& o : outs) {
                scored = scored || o.as<output::ScoreUpdate>() != nullptr;
                results = results || o.as<output::ResultsReady>() != nullptr;
                broadcast(wire::Output{std::move(o)});
            }
            if (std::holds_alternative<event::FrameIn>(in.event)) {
                const auto us = std::chrono::duration<double, std::micro>(Clock::now() - in.ingress).count();
                std::lock_guard lk(stats_mu_);
                stats_.frames += 1;
                if (scored) stats_.latency_us.push_back(us);
            }
            if (results && !cfg_.progress_dir.empty()) {
                try {
                    save_progress(state_.progress, cfg_.progress_dir);
                } catch (const Error& e) {
                    std::cerr << "progress not saved: " << e.what() << "\n";
                }
            }
        }
    }

    void ticker_loop() {
        const auto period = std::chrono::milliseconds(cfg_.tick_ms);
        auto next = Clock::now() + period;
        std::unique_lock lk(tick_mu_);
        while (running_) {
            if (tick_cv_.wait_until(lk, next, [&] { return !running_; })) break;
            next += period;
            enqueue(Incoming{event::Tick{}, Clock::now()});
        }
    }

    // ---- simulated camera ---------------------------------------------------

    void start_replay(const wire::ReplayStart& rs) {
        stop_replay();
        auto frames = replay_frames(ctx_.references.at(rs.challenge_id)->clip, rs.config);
        replay_stop_ = false;
        replay_thread_ = std::thread([this, frames = std::move(frames)] {
            const auto t0 = Clock::now();
            std::unique_lock lk(replay_mu_);
            for (const auto& f : frames) {
                const auto due = t0 + std::chrono::milliseconds(std::max<std::int64_t>(0, f.t_ms));
                if (replay_cv_.wait_until(lk, due, [&] { return replay_stop_; })) return;
                enqueue(Incoming{event::FrameIn{f}, Clock::now()});
            }
        });
    }

    void stop_replay() {
        {
            std::lock_guard lk(replay_mu_);
            replay_stop_ = true;
        }
        replay_cv_.notify_all();
        if (replay_thread_.joinable()) replay_thread_.join();
    }

    EngineConfig cfg_;
    SessionContext ctx_;
    SessionState state_;
    std::function<void(const SessionEvent&)> observer_;

    std::atomic<bool> running_{false};
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    Clock::time_point epoch_ = Clock::now();

    std::mutex queue_mu_;
    std::condition_variable queue_cv_;
    std::deque<Item> queue_;

    std::mutex conns_mu_;
    std::list<std::shared_ptr<Connection>> conns_;
    std::mutex subs_mu_;
    std::vector<std::shared_ptr<Connection>> subs_;

    mutable std::mutex stats_mu_;
    ServerStats stats_;

    std::mutex tick_mu_;
    std::condition_variable tick_cv_;

    std::mutex replay_mu_;
    std::condition_variable replay_cv_;
    bool replay_stop_ = false;
    std::thread replay_thread_;

    std::thread session_thread_;
    std::thread ticker_thread_;
    std::thread accept_thread_;
};

// ---- client -------------------------------------------------------------------

/// Blocking client for either dialect. Used by `drumcoach replay` and the tests.
class Client {
public:
    Client() = default;
    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;
    Client(Client&& o) noexcept : fd_(o.fd_), ws_(o.ws_), buf_(std::move(o.buf_)) { o.fd_ = -1; }
    ~Client() { close(); }

    /// `rcvbuf` > 0 shrinks the receive buffer before connecting (stalled-reader tests).
    static Client connect(const std::string& host, std::uint16_t port, bool websocket = false, int rcvbuf = 0) {
        Client c;
        c.fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (rcvbuf > 0) ::setsockopt(c.fd_, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof rcvbuf);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (::inet_pton(AF_INET, host == "localhost" ? "127.0.0.1" : host.c_str(), &addr.sin_addr) != 1 ||
            ::connect(c.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            throw Error(ErrorKind::Io, "cannot connect to " + host + ":" + std::to_string(port));
        }
        const int one = 1;
        ::setsockopt(c.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        if (websocket) c.handshake(host);
        return c;
    }

    static Client connect(const std::string& address, bool websocket = false) {
        const auto ep = parse_endpoint(address);
        return connect(ep.host, ep.port, websocket);
    }

    bool send_line(std::string_view line) {
        while (!line.empty() && line.back() == '\n') line.remove_suffix(1);
        if (ws_) {
            std::array<unsigned char, 4> mask{};
            std::uniform_int_distribution<int> byte(0, 255);
            for (auto& m : mask) m = static_cast<unsigned char>(byte(mask_rng_));
            return send_all(fd_, ws_frame(line, 0x1, mask.data()));
        }
        std::string data(line);
        data.push_back('\n');
        return send_all(fd_, data);
    }

    bool send(const wire::Message& m) { return send_line(wire::encode(m)); }

    bool send_raw(std::string_view bytes) { return send_all(fd_, bytes); }

    /// Next line (without newline), or nullopt on timeout / closed connection.
    std::optional<std::string> recv_line(int timeout_ms = 2000) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            if (ws_) {
                while (auto f = ws_take(buf_)) {
                    if (f->opcode == 0x1 || f->opcode == 0x0 || f->opcode == 0x2) return f->payload;
                    if (f->opcode == 0x8) return std::nullopt;
                }
            } else if (const auto nl = buf_.find('\n'); nl != std::string::npos) {
                auto line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return line;
            }
            if (!fill(deadline)) return std::nullopt;
        }
    }

    std::optional<wire::Message> recv(int timeout_ms = 2000) {
        auto line = recv_line(timeout_ms);
        if (!line) return std::nullopt;
        return wire::decode(*line);
    }

    /// True once the server has closed its side.
    bool wait_closed(int timeout_ms = 2000) {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            buf_.clear();
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return false;
            pollfd p{fd_, POLLIN, 0};
            if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return false;
            std::array<char, 64 * 1024> chunk{};
            const auto n = ::recv(fd_, chunk.data(), chunk.size(), 0);
            if (n <= 0) return true;
        }
    }

    void close() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

    int fd() const { return fd_; }

private:
    bool fill(std::chrono::steady_clock::time_point deadline) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() < 0) return false;
        pollfd p{fd_, POLLIN, 0};
        if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return false;
        std::array<char, 16 * 1024> chunk{};
        const auto n = ::recv(fd_, chunk.data(), chunk.size(), 0);
        if (n <= 0) return false;
        buf_.append(chunk.data(), static_cast<std::size_t>(n));
        return true;
    }

    void handshake(const std::string& host) {
        std::array<unsigned char, 16> nonce{};
        std::uniform_int_distribution<int> byte(0, 255);
        for (auto& b : nonce) b = static_cast<unsigned char>(byte(mask_rng_));
        const auto key = base64(nonce.data(), nonce.size());
        const std::string req = "GET /session HTTP/1.1\r\nHost: " + host +
                                "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                                "\r\nSec-WebSocket-Version: 13\r\n\r\n";
        send_all(fd_, req);
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
        while (buf_.find("\r\n\r\n") == std::string::npos) {
            if (!fill(deadline)) throw Error(ErrorKind::Io, "websocket handshake timed out");
        }
        const auto end = buf_.find("\r\n\r\n");
        const auto head = buf_.substr(0, end + 2);
        buf_.erase(0, end + 4);
        if (head.rfind("HTTP/1.1 101", 0) != 0 || header_value(head, "Sec-WebSocket-Accept") != ws_accept(key)) {
            throw Error(ErrorKind::Io, "websocket handshake rejected");
        }
        ws_ = true;
    }

    int fd_ = -1;
    bool ws_ = false;
    std::string buf_;
    std::mt19937 mask_rng_{std::random_device{}()};
};

/// One-shot HTTP GET: {status, body}.
inline std::pair<int, std::string> http_get(const std::string& host, std::uint16_t port, const std::string& path) {
    auto c = Client::connect(host, port);
    c.send_raw("GET " + path + " HTTP/1.1\r\nHost: " + host + "\r\nConnection: close\r\n\r\n");
    std::string all;
    std::array<char, 16 * 1024> chunk{};
    for (;;) {
        pollfd p{c.fd(), POLLIN, 0};
        if (::poll(&p, 1, 2000) <= 0) break;
        const auto n = ::recv(c.fd(), chunk.data(), chunk.size(), 0);
        if (n <= 0) break;
        all.append(chunk.data(), static_cast<std::size_t>(n));
    }
    const auto sp = all.find(' ');
    const auto end = all.find("\r\n\r\n");
    if (sp == std::string::npos || end == std::string::npos) return {0, {}};
    return {std::stoi(all.substr(sp + 1, 3)), all.substr(end + 4)};
}

} // namespace drumcoach::net
