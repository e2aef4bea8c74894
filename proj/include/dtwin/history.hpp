#pragma once

#include "dtwin/assoc_store.hpp"
#include "dtwin/telemetry.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace dtwin {

using FramePtr = std::shared_ptr<const SnapshotFrame>;

/// Frame <-> triple encoding. Rows are node names (plus `@frame` and
/// `@env/<sensor>`), columns are metric paths such as `cpu_load` or `gpu1.temp_c`.
AssocStore frame_to_triples(const SnapshotFrame& frame);
/// Throws InputError when the triples do not describe a frame.
SnapshotFrame triples_to_frame(const AssocStore& triples);

struct RetentionPolicy {
    std::size_t max_frames = 10'000;
    TimestampMs max_age_ms = 24LL * 3600 * 1000;
};

/// Time-indexed frame history. One appender, any number of concurrent readers.
///
/// With a directory attached every append is written as
/// `<dir>/frames/<timestamp>.tsv` (triple format) and `<dir>/index` lists the
/// retained timestamps, one per line.
class HistoryStore {
public:
    explicit HistoryStore(RetentionPolicy retention = {});

    /// Loads an existing directory (or creates an empty one) and persists future appends there.
    explicit HistoryStore(const std::filesystem::path& dir, RetentionPolicy retention = {});

    /// Throws HistoryError unless frame.timestamp is newer than every stored frame.
    void append(SnapshotFrame frame);

    /// Frame with the greatest timestamp <= t. Throws HistoryError when t
    /// precedes the first frame or the store is empty.
    FramePtr at(TimestampMs t) const;

    /// Frames with t0 <= timestamp <= t1. Throws InputError when t0 > t1.
    std::vector<FramePtr> range(TimestampMs t0, TimestampMs t1) const;

    FramePtr latest() const;
    std::vector<TimestampMs> timestamps() const;
    std::size_t size() const;
    const std::optional<std::filesystem::path>& directory() const { return dir_; }

private:
    void evict_locked();
    void write_index_locked() const;

    RetentionPolicy retention_;
    std::optional<std::filesystem::path> dir_;
    mutable std::shared_mutex mutex_;
    std::map<TimestampMs, FramePtr> frames_;
};

/// Conjunctive node filter. Text form: whitespace-separated `field=value`
/// predicates with fields node (glob), user, job, alert.
struct FocusQuery {
    std::optional<std::string> node_glob;
    std::optional<std::string> user;
    std::optional<std::string> job_id;
    std::optional<std::string> alert_rule;

    /// Throws InputError on unknown fields, malformed globs or an empty query.
    static FocusQuery parse(std::string_view text);
    void validate() const;
};

/// Names of nodes matching every predicate, sorted.
std::vector<std::string> focus(const SnapshotFrame& frame, const FocusQuery& query);

} // namespace dtwin
