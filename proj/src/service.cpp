#include "dtwin/service.hpp"

#include "dtwin/error.hpp"
#include "dtwin/simulator.hpp"

#include "httplib.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace dtwin {

std::optional<std::string> Subscription::pop(std::chrono::milliseconds timeout)
{
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty())
        return std::nullopt;
    auto msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
}

void Subscription::close()
{
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool Subscription::closed() const
{
    std::lock_guard lock(mutex_);
    return closed_;
}

std::shared_ptr<Subscription> Broadcaster::subscribe()
{
    auto sub = std::make_shared<Subscription>();
    std::lock_guard lock(mutex_);
    if (!full_.empty())
        sub->queue_.push_back(full_);
    subs_.push_back(sub);
    return sub;
}

void Broadcaster::unsubscribe(const std::shared_ptr<Subscription>& sub)
{
    std::lock_guard lock(mutex_);
    subs_.erase(std::remove(subs_.begin(), subs_.end(), sub), subs_.end());
}

void Broadcaster::publish(std::string message, std::string full_message)
{
    std::lock_guard lock(mutex_);
    const bool had_scene = !full_.empty();
    full_ = std::move(full_message);
    for (auto& sub : subs_) {
        {
            std::lock_guard sub_lock(sub->mutex_);
            if (!had_scene && sub->queue_.empty()) {
                // subscribed before the first commit: start from the full scene
                sub->queue_.push_back(full_);
            } else if (sub->queue_.size() >= max_queue_) {
                sub->queue_.clear();
                sub->queue_.push_back(full_);
            } else {
                sub->queue_.push_back(message);
            }
        }
        sub->cv_.notify_all();
    }
}

void Broadcaster::close_all()
{
    std::lock_guard lock(mutex_);
    for (auto& sub : subs_)
        sub->close();
}

std::size_t Broadcaster::subscriber_count() const
{
    std::lock_guard lock(mutex_);
    return subs_.size();
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path)
{
    ServiceConfig cfg;
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    auto to_int = [](const std::string& key, const std::string& v) {
        long long out = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size())
            throw ConfigError("service config key '" + key + "': expected an integer");
        return out;
    };
    for (const auto& [key, value] : parse_key_values(read_file(path))) {
        if (key == "host") cfg.host = value;
        else if (key == "port") cfg.port = static_cast<int>(to_int(key, value));
        else if (key == "tick_hz") {
            auto v = Value::from_text(value);
            if (!v.is_number() || v.number() < 0)
                throw ConfigError("service config key 'tick_hz': expected a non-negative number");
            cfg.tick_hz = v.number();
        } else if (key == "source") {
            if (value == "simulator") cfg.source = SourceKind::simulator;
            else if (value == "watch") cfg.source = SourceKind::watch_dir;
            else throw ConfigError("service config key 'source': expected simulator or watch");
        } else if (key == "watch_dir") cfg.watch_dir = resolve(value);
        else if (key == "schema") cfg.schema = SnapshotSchema::load(resolve(value));
        else if (key == "history_dir") cfg.history_dir = resolve(value);
        else if (key == "retention_frames") cfg.retention.max_frames = static_cast<std::size_t>(to_int(key, value));
        else if (key == "retention_ms") cfg.retention.max_age_ms = to_int(key, value);
        else if (key == "scene") cfg.pipeline.scene = SceneConfig::load(resolve(value));
        else if (key == "rules") cfg.pipeline.rules = load_rules(resolve(value));
        else if (key == "workers") cfg.pipeline.workers = static_cast<int>(to_int(key, value));
        else if (key == "max_queue") cfg.max_queue = static_cast<std::size_t>(to_int(key, value));
        else throw ConfigError("unknown service config key '" + key + "'");
    }
    return cfg;
}

void ServiceConfig::apply_environment()
{
    const char* bind = std::getenv("DTWIN_BIND");
    if (!bind || !*bind)
        return;
    std::string text(bind);
    auto colon = text.rfind(':');
    if (colon == std::string::npos)
        throw ConfigError("DTWIN_BIND must be host:port");
    host = text.substr(0, colon);
    const std::string port_text = text.substr(colon + 1);
    int p = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), p);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || p < 0 || p > 65535)
        throw ConfigError("DTWIN_BIND has a bad port '" + port_text + "'");
    port = p;
}

void ServiceConfig::validate() const
{
    if (source == SourceKind::watch_dir) {
        if (watch_dir.empty())
            throw ConfigError("watch source configured without a watch directory");
        if (!std::filesystem::is_directory(watch_dir))
            throw ConfigError("watch directory '" + watch_dir.string() + "' does not exist");
    }
    if (tick_hz < 0)
        throw ConfigError("tick_hz must be >= 0");
    if (port < 0 || port > 65535)
        throw ConfigError("port out of range");
}

Service::Service(ServiceConfig config)
    : config_((config.validate(), std::move(config))),
      history_(config_.history_dir ? std::make_unique<HistoryStore>(*config_.history_dir, config_.retention)
                                   : std::make_unique<HistoryStore>(config_.retention)),
      pipeline_(config_.pipeline),
      broadcaster_(config_.max_queue),
      server_(std::make_unique<httplib::Server>())
{
    if (auto latest = history_->latest(); latest && config_.source == SourceKind::simulator) {
        // continue the simulated clock after what is already on disk
        const auto& sim = config_.pipeline.scene.simulator;
        sim_tick_ = std::max<std::int64_t>(
            0, static_cast<std::int64_t>((latest->timestamp - sim.start_ms) * sim.tick_hz / 1000.0) + 1);
    }
    install_routes();
}

Service::~Service()
{
    stop();
}

std::optional<ParseResult> Service::next_frame()
{
    if (config_.source == SourceKind::simulator) {
        ParseResult r;
        r.frame = simulate_tick(config_.pipeline.scene.simulator, sim_tick_++);
        r.data_rows = r.frame.nodes.size();
        return r;
    }

    std::vector<std::filesystem::path> fresh;
    for (const auto& entry : std::filesystem::directory_iterator(config_.watch_dir)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".tsv" || ext == ".csv") && !seen_files_.count(entry.path().string()))
            fresh.push_back(entry.path());
    }
    if (fresh.empty())
        return std::nullopt;
    std::sort(fresh.begin(), fresh.end());
    for (const auto& p : fresh)
        seen_files_.insert(p.string());

    // coalesce: only the newest file of this tick is processed
    const auto& path = fresh.back();
    auto mtime = std::filesystem::last_write_time(path);
    auto sys = std::chrono::file_clock::to_sys(mtime);
    TimestampMs ts = std::chrono::duration_cast<std::chrono::milliseconds>(sys.time_since_epoch()).count();
    if (auto latest = history_->latest(); latest && ts <= latest->timestamp)
        ts = latest->timestamp + 1;
    auto schema = config_.schema;
    if (path.extension() == ".csv")
        schema.delimiter = ',';
    return parse_snapshot(read_file(path), schema, ts);
}

bool Service::step()
{
    std::lock_guard lock(commit_mutex_);
    auto parsed = next_frame();
    if (!parsed)
        return false;
    auto result = pipeline_.tick(parsed->frame, parsed->clamp_count, parsed->row_errors.size());
    history_->append(result.conditioned.frame);
    broadcaster_.publish(frame_message(to_json(result.packet)), frame_message(to_json(pipeline_.full_packet())));
    return true;
}

Scene Service::scene() const
{
    std::lock_guard lock(commit_mutex_);
    return pipeline_.scene();
}

namespace {

std::optional<TimestampMs> int_param(const httplib::Request& req, const char* name)
{
    if (!req.has_param(name))
        return std::nullopt;
    auto text = req.get_param_value(name);
    TimestampMs v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        return std::nullopt;
    return v;
}

void send_json(httplib::Response& res, const json& body, int status = 200)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message)
{
    send_json(res, {{"error", message}}, status);
}

} // namespace

void Service::install_routes()
{
    auto& srv = *server_;

    srv.Get("/live", [this](const httplib::Request& req, httplib::Response& res) {
        auto sub = broadcaster_.subscribe();
        std::optional<long long> limit;
        if (auto n = int_param(req, "max_packets"))
            limit = *n;
        auto sent = std::make_shared<long long>(0);
        res.set_chunked_content_provider(
            "application/x-dtwin-stream",
            [this, sub, limit, sent](std::size_t, httplib::DataSink& sink) {
                if (limit && *sent >= *limit) {
                    sink.done();
                    return true;
                }
                auto msg = sub->pop(std::chrono::milliseconds(100));
                if (msg) {
                    ++*sent;
                    return sink.write(msg->data(), msg->size());
                }
                if (!running_ || sub->closed()) {
                    sink.done();
                    return true;
                }
                return sink.is_writable();
            },
            [this, sub](bool) { broadcaster_.unsubscribe(sub); });
    });

    srv.Get("/nodes", [this](const httplib::Request&, httplib::Response& res) {
        std::lock_guard lock(commit_mutex_);
        json nodes = json::array();
        TimestampMs ts = 0;
        if (const auto& last = pipeline_.last()) {
            ts = last->frame.timestamp;
            for (const auto& [name, node] : last->frame.nodes)
                nodes.push_back({{"node_name", name},
                                 {"kind", std::string(to_string(node.kind))},
                                 {"state", std::string(to_string(node.state))},
                                 {"alert_count", node.alerts.size()}});
        }
        send_json(res, {{"timestamp", ts}, {"nodes", nodes}});
    });

    srv.Get(R"(/nodes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(commit_mutex_);
        const std::string name = req.matches[1];
        const auto& last = pipeline_.last();
        if (!last || !last->frame.nodes.count(name))
            return send_error(res, 404, "unknown node '" + name + "'");
        send_json(res, to_json(last->frame.nodes.at(name)));
    });

    srv.Get("/frames", [this](const httplib::Request& req, httplib::Response& res) {
        auto t0 = int_param(req, "t0");
        auto t1 = int_param(req, "t1");
        if (!t0 || !t1)
            return send_error(res, 400, "t0 and t1 must be integer epoch milliseconds");
        if (*t0 > *t1)
            return send_error(res, 400, "t0 is after t1");
        json frames = json::array();
        for (const auto& f : history_->range(*t0, *t1))
            frames.push_back(to_json(*f));
        send_json(res, {{"frames", frames}});
    });

    srv.Get("/frames/at", [this](const httplib::Request& req, httplib::Response& res) {
        auto t = int_param(req, "t");
        if (!t)
            return send_error(res, 400, "t must be integer epoch milliseconds");
        try {
            send_json(res, to_json(*history_->at(*t)));
        } catch (const HistoryError& e) {
            send_error(res, 404, e.what());
        }
    });

    srv.Get("/alerts", [this](const httplib::Request&, httplib::Response& res) {
        std::lock_guard lock(commit_mutex_);
        json alerts = json::array();
        if (const auto& last = pipeline_.last())
            for (const auto& a : last->alerts)
                alerts.push_back(to_json(a));
        send_json(res, {{"alerts", alerts}});
    });

    srv.Get("/stats", [this](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(commit_mutex_);
        const auto naive = pipeline_.naive();
        const auto& instanced = pipeline_.stats();
        if (req.get_param_value("format") == "json")
            res.set_content(format_stats_jsonl(naive, instanced), "application/x-ndjson");
        else
            res.set_content(format_stats_table(naive, instanced), "text/plain");
    });

    srv.Post("/focus", [this](const httplib::Request& req, httplib::Response& res) {
        std::string text = req.body;
        if (req.get_header_value("Content-Type") == "application/json") {
            try {
                text = json::parse(req.body).at("query").get<std::string>();
            } catch (const std::exception& e) {
                return send_error(res, 400, std::string("bad focus request: ") + e.what());
            }
        }
        FocusQuery query;
        try {
            query = FocusQuery::parse(text);
        } catch (const InputError& e) {
            return send_error(res, 400, e.what());
        }
        std::lock_guard lock(commit_mutex_);
        const auto& last = pipeline_.last();
        json nodes = last ? json(focus(last->frame, query)) : json::array();
        send_json(res, {{"nodes", nodes}});
    });
}

void Service::start()
{
    if (running_)
        return;
    if (config_.port == 0) {
        port_ = server_->bind_to_any_port(config_.host);
        if (port_ < 0)
            throw IoError("cannot bind " + config_.host);
    } else {
        if (!server_->bind_to_port(config_.host, config_.port))
            throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
        port_ = config_.port;
    }
    running_ = true;
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();

    if (config_.tick_hz > 0) {
        tick_thread_ = std::thread([this] {
            const auto period = std::chrono::duration<double>(1.0 / config_.tick_hz);
            auto next = std::chrono::steady_clock::now();
            while (running_) {
                try {
                    step();
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "dtwin: tick failed: %s\n", e.what());
                }
                next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
                while (running_ && std::chrono::steady_clock::now() < next)
                    std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
        });
    }
}

void Service::stop()
{
    if (!running_.exchange(false))
        return;
    if (tick_thread_.joinable())
        tick_thread_.join();
    broadcaster_.close_all();
    server_->stop();
    if (server_thread_.joinable())
        server_thread_.join();
}

} // namespace dtwin
