#pragma once

#include "dtwin/history.hpp"
#include "dtwin/pipeline.hpp"
#include "dtwin/snapshot.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace dtwin {

/// A subscriber's queue of framed live-stream messages.
class Subscription {
public:
    /// Waits up to `timeout` for the next message.
    std::optional<std::string> pop(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;

private:
    friend class Broadcaster;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    bool closed_ = false;
};

/// Fan-out of committed packets. A subscriber always starts with the current
/// full scene; a subscriber that falls `max_queue` messages behind is resynced
/// with a fresh full scene instead of growing without bound.
class Broadcaster {
public:
    explicit Broadcaster(std::size_t max_queue = 256) : max_queue_(max_queue) {}

    std::shared_ptr<Subscription> subscribe();
    void unsubscribe(const std::shared_ptr<Subscription>& sub);

    /// Publishes one tick: `message` goes to existing subscribers, `full_message`
    /// becomes what new subscribers start from.
    void publish(std::string message, std::string full_message);
    void close_all();
    std::size_t subscriber_count() const;

private:
    std::size_t max_queue_;
    mutable std::mutex mutex_;
    std::string full_;
    std::vector<std::shared_ptr<Subscription>> subs_;
};

enum class SourceKind { simulator, watch_dir };

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080; ///< 0 picks a free port
    double tick_hz = 1.0; ///< 0 = ticks only through Service::step()
    SourceKind source = SourceKind::simulator;
    std::filesystem::path watch_dir;
    SnapshotSchema schema = SnapshotSchema::standard(2);
    std::optional<std::filesystem::path> history_dir;
    RetentionPolicy retention;
    PipelineConfig pipeline;
    std::size_t max_queue = 256;

    /// `key = value` file: host, port, tick_hz, source (simulator|watch),
    /// watch_dir, schema, history_dir, retention_frames, retention_ms, scene,
    /// rules, workers, max_queue. Relative paths resolve against the file's directory.
    static ServiceConfig load(const std::filesystem::path& path);
    /// Applies DTWIN_BIND=host:port when set.
    void apply_environment();
    /// Throws ConfigError for a missing data source.
    void validate() const;
};

/// HTTP front end over the frame pipeline.
///
/// Endpoints: GET /live (chunked, length-prefixed JSON packets), GET /nodes,
/// GET /nodes/<name>, GET /frames?t0=&t1=, GET /frames/at?t=, GET /alerts,
/// GET /stats[?format=json], POST /focus (body: focus query text).
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts serving (and ticking when tick_hz > 0). Throws on bind failure.
    void start();
    void stop();
    int port() const { return port_; }

    /// Runs one pipeline tick and broadcasts the packet. Returns false when the
    /// source has no new frame.
    bool step();

    const HistoryStore& history() const { return *history_; }
    /// Snapshot of the committed scene under the commit lock.
    Scene scene() const;
    Broadcaster& broadcaster() { return broadcaster_; }

private:
    std::optional<ParseResult> next_frame();
    void install_routes();

    ServiceConfig config_;
    std::unique_ptr<HistoryStore> history_;
    Pipeline pipeline_;
    Broadcaster broadcaster_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
    std::thread tick_thread_;
    std::atomic<bool> running_{false};
    int port_ = 0;

    mutable std::mutex commit_mutex_;
    std::int64_t sim_tick_ = 0;
    std::set<std::string> seen_files_;
};

} // namespace dtwin
