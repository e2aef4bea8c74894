#include "dtwin/history.hpp"

#include "dtwin/error.hpp"
#include "dtwin/glob.hpp"

#include <algorithm>
#include <charconv>
#include <mutex>
#include <sstream>

namespace dtwin {

namespace {

constexpr std::string_view frame_row = "@frame";
constexpr std::string_view env_prefix = "@env/";

double number_at(const AssocStore& store, const std::string& row, std::string_view col)
{
    auto v = store.get(row, col);
    if (!v)
        throw InputError("frame triples: missing " + row + "/" + std::string(col));
    auto n = v->as_number();
    if (!n)
        throw InputError("frame triples: " + row + "/" + std::string(col) + " is not numeric");
    return *n;
}

std::string timestamp_text(TimestampMs t)
{
    return std::to_string(t);
}

std::vector<std::string> split_alerts(const std::string& text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find(';', start);
        auto piece = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        if (!piece.empty())
            out.push_back(piece);
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return out;
}

} // namespace

AssocStore frame_to_triples(const SnapshotFrame& frame)
{
    AssocStore store;
    store.insert(frame_row, "timestamp", timestamp_text(frame.timestamp));
    for (const auto& [name, node] : frame.nodes) {
        if (name.empty() || name.front() == '@')
            throw InputError("node name '" + name + "' cannot be stored as a triple row");
        store.insert(name, "kind", std::string(to_string(node.kind)));
        store.insert(name, "state", std::string(to_string(node.state)));
        store.insert(name, "cpu_load", node.cpu_load);
        store.insert(name, "node_temp_c", node.node_temp_c);
        if (node.user)
            store.insert(name, "user", *node.user);
        if (node.job_id)
            store.insert(name, "job_id", *node.job_id);
        if (!node.alerts.empty()) {
            std::string joined;
            for (const auto& a : node.alerts) {
                if (!joined.empty())
                    joined.push_back(';');
                joined += a;
            }
            store.insert(name, "alerts", joined);
        }
        for (const auto& gpu : node.gpus) {
            const std::string p = "gpu" + std::to_string(gpu.gpu_index) + ".";
            store.insert(name, p + "util", gpu.utilization);
            store.insert(name, p + "mem_used", gpu.mem_used_bytes);
            store.insert(name, p + "mem_cap", gpu.mem_capacity_bytes);
            store.insert(name, p + "power_w", gpu.power_draw_w);
            store.insert(name, p + "temp_c", gpu.temp_c);
        }
    }
    for (const auto& env : frame.env) {
        const std::string row = std::string(env_prefix) + env.sensor_id;
        store.insert(row, "humidity_pct", env.humidity_pct);
        store.insert(row, "airflow", env.airflow);
        store.insert(row, "temp_c", env.temp_c);
        store.insert(row, "timestamp", timestamp_text(env.timestamp));
    }
    return store;
}

SnapshotFrame triples_to_frame(const AssocStore& triples)
{
    SnapshotFrame frame;
    auto ts = triples.get(frame_row, "timestamp");
    if (!ts)
        throw InputError("frame triples: missing @frame/timestamp");
    frame.timestamp = static_cast<TimestampMs>(std::stoll(ts->to_text()));

    std::map<std::string, std::map<std::string, Value>> rows;
    for (const auto& [key, val] : triples)
        rows[key.first].emplace(key.second, val);

    for (const auto& [row, cols] : rows) {
        if (row == frame_row)
            continue;
        if (row.starts_with(env_prefix)) {
            EnvTelemetry env;
            env.sensor_id = row.substr(env_prefix.size());
            env.humidity_pct = number_at(triples, row, "humidity_pct");
            env.airflow = number_at(triples, row, "airflow");
            env.temp_c = number_at(triples, row, "temp_c");
            env.timestamp = static_cast<TimestampMs>(std::stoll(cols.at("timestamp").to_text()));
            frame.env.push_back(env);
            continue;
        }

        NodeTelemetry node;
        node.node_name = row;
        auto text = [&](const char* col) -> std::optional<std::string> {
            auto it = cols.find(col);
            if (it == cols.end())
                return std::nullopt;
            return it->second.to_text();
        };
        auto kind = parse_node_kind(text("kind").value_or(""));
        auto state = parse_node_state(text("state").value_or(""));
        if (!kind || !state)
            throw InputError("frame triples: node '" + row + "' lacks kind/state");
        node.kind = *kind;
        node.state = *state;
        node.cpu_load = number_at(triples, row, "cpu_load");
        node.node_temp_c = number_at(triples, row, "node_temp_c");
        node.user = text("user");
        node.job_id = text("job_id");
        if (auto alerts = text("alerts"))
            node.alerts = split_alerts(*alerts);

        std::map<int, GpuTelemetry> gpus;
        for (const auto& [col, val] : cols) {
            if (!col.starts_with("gpu"))
                continue;
            auto dot = col.find('.');
            int index = -1;
            auto [p, ec] = std::from_chars(col.data() + 3, col.data() + dot, index);
            if (dot == std::string::npos || ec != std::errc() || p != col.data() + dot)
                throw InputError("frame triples: bad gpu column '" + col + "'");
            GpuTelemetry& gpu = gpus[index];
            gpu.gpu_index = index;
            const std::string field = col.substr(dot + 1);
            const double v = number_at(triples, row, col);
            if (field == "util") gpu.utilization = v;
            else if (field == "mem_used") gpu.mem_used_bytes = v;
            else if (field == "mem_cap") gpu.mem_capacity_bytes = v;
            else if (field == "power_w") gpu.power_draw_w = v;
            else if (field == "temp_c") gpu.temp_c = v;
            else throw InputError("frame triples: unknown gpu field '" + col + "'");
        }
        for (auto& [i, gpu] : gpus)
            node.gpus.push_back(gpu);
        frame.nodes.emplace(row, std::move(node));
    }
    return frame;
}

HistoryStore::HistoryStore(RetentionPolicy retention) : retention_(retention)
{
    if (retention_.max_frames == 0)
        throw InputError("history retention must keep at least one frame");
}

HistoryStore::HistoryStore(const std::filesystem::path& dir, RetentionPolicy retention) : HistoryStore(retention)
{
    std::error_code ec;
    std::filesystem::create_directories(dir / "frames", ec);
    if (ec)
        throw IoError("cannot create history directory '" + dir.string() + "': " + ec.message());

    const auto index = dir / "index";
    if (std::filesystem::exists(index)) {
        std::istringstream lines(read_file(index));
        std::string line;
        while (std::getline(lines, line)) {
            if (line.empty())
                continue;
            auto frame = triples_to_frame(AssocStore::load(dir / "frames" / (line + ".tsv")));
            auto ts = frame.timestamp;
            frames_.emplace(ts, std::make_shared<const SnapshotFrame>(std::move(frame)));
        }
    }
    dir_ = dir;
}

void HistoryStore::append(SnapshotFrame frame)
{
    std::unique_lock lock(mutex_);
    if (!frames_.empty() && frame.timestamp <= frames_.rbegin()->first)
        throw HistoryError("append rejected: timestamp " + std::to_string(frame.timestamp) +
                           " is not after latest " + std::to_string(frames_.rbegin()->first));
    const auto ts = frame.timestamp;
    if (dir_)
        frame_to_triples(frame).save(*dir_ / "frames" / (timestamp_text(ts) + ".tsv"));
    frames_.emplace(ts, std::make_shared<const SnapshotFrame>(std::move(frame)));
    evict_locked();
    if (dir_)
        write_index_locked();
}

void HistoryStore::evict_locked()
{
    const TimestampMs newest = frames_.rbegin()->first;
    while (frames_.size() > retention_.max_frames ||
           (frames_.size() > 1 && newest - frames_.begin()->first > retention_.max_age_ms)) {
        if (dir_) {
            std::error_code ec;
            std::filesystem::remove(*dir_ / "frames" / (timestamp_text(frames_.begin()->first) + ".tsv"), ec);
        }
        frames_.erase(frames_.begin());
    }
}

void HistoryStore::write_index_locked() const
{
    std::string out;
    for (const auto& [ts, frame] : frames_) {
        out += timestamp_text(ts);
        out.push_back('\n');
    }
    write_file_atomic(*dir_ / "index", out);
}

FramePtr HistoryStore::at(TimestampMs t) const
{
    std::shared_lock lock(mutex_);
    if (frames_.empty())
        throw HistoryError("history is empty");
    auto it = frames_.upper_bound(t);
    if (it == frames_.begin())
        throw HistoryError("time " + std::to_string(t) + " precedes the first stored frame " +
                           std::to_string(frames_.begin()->first));
    return std::prev(it)->second;
}

std::vector<FramePtr> HistoryStore::range(TimestampMs t0, TimestampMs t1) const
{
    if (t0 > t1)
        throw InputError("frame range start " + std::to_string(t0) + " is after end " + std::to_string(t1));
    std::shared_lock lock(mutex_);
    std::vector<FramePtr> out;
    for (auto it = frames_.lower_bound(t0); it != frames_.end() && it->first <= t1; ++it)
        out.push_back(it->second);
    return out;
}

FramePtr HistoryStore::latest() const
{
    std::shared_lock lock(mutex_);
    return frames_.empty() ? nullptr : frames_.rbegin()->second;
}

std::vector<TimestampMs> HistoryStore::timestamps() const
{
    std::shared_lock lock(mutex_);
    std::vector<TimestampMs> out;
    for (const auto& [ts, f] : frames_)
        out.push_back(ts);
    return out;
}

std::size_t HistoryStore::size() const
{
    std::shared_lock lock(mutex_);
    return frames_.size();
}

FocusQuery FocusQuery::parse(std::string_view text)
{
    FocusQuery q;
    std::istringstream words{std::string(text)};
    std::string word;
    while (words >> word) {
        auto eq = word.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == word.size())
            throw InputError("focus query: expected field=value, got '" + word + "'");
        auto field = word.substr(0, eq);
        auto value = word.substr(eq + 1);
        std::optional<std::string>* slot = nullptr;
        if (field == "node") slot = &q.node_glob;
        else if (field == "user") slot = &q.user;
        else if (field == "job" || field == "job_id") slot = &q.job_id;
        else if (field == "alert") slot = &q.alert_rule;
        else throw InputError("focus query: unknown field '" + field + "'");
        if (*slot)
            throw InputError("focus query: field '" + field + "' given twice");
        *slot = value;
    }
    q.validate();
    return q;
}

void FocusQuery::validate() const
{
    if (!node_glob && !user && !job_id && !alert_rule)
        throw InputError("focus query needs at least one predicate");
    if (node_glob)
        Glob check(*node_glob);
}

std::vector<std::string> focus(const SnapshotFrame& frame, const FocusQuery& query)
{
    query.validate();
    std::optional<Glob> glob;
    if (query.node_glob)
        glob.emplace(*query.node_glob);

    std::vector<std::string> out;
    for (const auto& [name, node] : frame.nodes) {
        if (glob && !glob->matches(name))
            continue;
        if (query.user && node.user != query.user)
            continue;
        if (query.job_id && node.job_id != query.job_id)
            continue;
        if (query.alert_rule &&
            std::find(node.alerts.begin(), node.alerts.end(), *query.alert_rule) == node.alerts.end())
            continue;
        out.push_back(name);
    }
    return out;
}

} // namespace dtwin
