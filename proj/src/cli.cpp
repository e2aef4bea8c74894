#include "dtwin/cli.hpp"

#include "dtwin/alerts.hpp"
#include "dtwin/config.hpp"
#include "dtwin/error.hpp"
#include "dtwin/history.hpp"
#include "dtwin/pipeline.hpp"
#include "dtwin/service.hpp"
#include "dtwin/simulator.hpp"
#include "dtwin/snapshot.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <thread>

namespace dtwin {

namespace {

std::atomic<bool> interrupted{false};

extern "C" void on_signal(int)
{
    interrupted = true;
}

TimestampMs file_mtime_ms(const std::filesystem::path& path)
{
    auto sys = std::chrono::file_clock::to_sys(std::filesystem::last_write_time(path));
    return std::chrono::duration_cast<std::chrono::milliseconds>(sys.time_since_epoch()).count();
}

std::string pad_tick(std::int64_t t)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(t));
    return buf;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"dtwin: HPC digital-twin telemetry, scene encoding and batching"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "Service config file");

    // serve
    auto* serve = app.add_subcommand("serve", "Start the streaming service");
    std::string serve_host, serve_source, serve_watch, serve_history, serve_scene, serve_rules, serve_schema;
    int serve_port = -1;
    double serve_hz = -1;
    serve->add_option("--host", serve_host, "Bind address");
    serve->add_option("--port", serve_port, "Bind port (0 = any)");
    serve->add_option("--hz", serve_hz, "Tick rate");
    serve->add_option("--source", serve_source, "simulator or watch")->check(CLI::IsMember({"simulator", "watch"}));
    serve->add_option("--watch-dir", serve_watch, "Directory polled for snapshot files");
    serve->add_option("--history", serve_history, "History directory");
    serve->add_option("--scene", serve_scene, "Scene config");
    serve->add_option("--rules", serve_rules, "Alert rules file");
    serve->add_option("--schema", serve_schema, "Snapshot schema file");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse a snapshot file and append it to history");
    std::string ingest_file, ingest_history = "history", ingest_schema, ingest_rules;
    std::optional<TimestampMs> ingest_ts;
    int ingest_gpus = 2;
    ingest->add_option("file", ingest_file, "Snapshot file (TSV or CSV)")->required();
    ingest->add_option("--history", ingest_history, "History directory")->capture_default_str();
    ingest->add_option("--schema", ingest_schema, "Snapshot schema file");
    ingest->add_option("--gpus", ingest_gpus, "GPU column groups of the standard schema")->capture_default_str();
    ingest->add_option("--rules", ingest_rules, "Alert rules file");
    ingest->add_option("--timestamp", ingest_ts, "Frame timestamp, epoch ms (default: file mtime, moved past the latest stored frame)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Write synthetic snapshot files");
    SimulatorConfig sim;
    std::int64_t sim_ticks = 1, sim_start = 0;
    std::string sim_out = ".";
    bool sim_csv = false;
    simulate->add_option("--nodes", sim.node_count, "GPU-accelerated nodes")->capture_default_str();
    simulate->add_option("--gpus", sim.gpus_per_node, "GPUs per node")->capture_default_str();
    simulate->add_option("--cpu-nodes", sim.cpu_node_count, "Additional cpu-only nodes")->capture_default_str();
    simulate->add_option("--hz", sim.tick_hz, "Tick rate")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    simulate->add_option("--ticks", sim_ticks, "Number of ticks")->capture_default_str();
    simulate->add_option("--start-tick", sim_start, "First tick index")->capture_default_str();
    simulate->add_option("--out", sim_out, "Output directory")->capture_default_str();
    simulate->add_flag("--csv", sim_csv, "Comma-separated output");

    // replay
    auto* replay = app.add_subcommand("replay", "Stream historical packets as JSON lines");
    TimestampMs replay_from = 0, replay_to = 0;
    std::string replay_history = "history", replay_scene, replay_rules;
    replay->add_option("--from", replay_from, "Start, epoch ms")->required();
    replay->add_option("--to", replay_to, "End, epoch ms")->required();
    replay->add_option("--history", replay_history, "History directory")->capture_default_str();
    replay->add_option("--scene", replay_scene, "Scene config");
    replay->add_option("--rules", replay_rules, "Alert rules file");

    // stats
    auto* stats = app.add_subcommand("stats", "Print the naive vs instanced batch report");
    std::string stats_scene;
    bool stats_json = false;
    stats->add_option("--scene", stats_scene, "Scene config (default: built-in reference)");
    stats->add_flag("--json", stats_json, "JSON-lines output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*serve) {
            ServiceConfig cfg = config_path.empty() ? ServiceConfig{} : ServiceConfig::load(config_path);
            cfg.apply_environment();
            if (!serve_host.empty()) cfg.host = serve_host;
            if (serve_port >= 0) cfg.port = serve_port;
            if (serve_hz >= 0) cfg.tick_hz = serve_hz;
            if (serve_source == "simulator") cfg.source = SourceKind::simulator;
            if (serve_source == "watch") cfg.source = SourceKind::watch_dir;
            if (!serve_watch.empty()) cfg.watch_dir = serve_watch;
            if (!serve_history.empty()) cfg.history_dir = serve_history;
            if (!serve_scene.empty()) cfg.pipeline.scene = SceneConfig::load(serve_scene);
            if (!serve_rules.empty()) cfg.pipeline.rules = load_rules(serve_rules);
            if (!serve_schema.empty()) cfg.schema = SnapshotSchema::load(serve_schema);

            Service service(cfg);
            service.start();
            err << "dtwin: serving on " << cfg.host << ":" << service.port() << "\n";
            interrupted = false;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            while (!interrupted)
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            service.stop();
            return 0;
        }

        if (*ingest) {
            const std::filesystem::path path(ingest_file);
            auto text = read_file(path);
            SnapshotSchema schema = ingest_schema.empty() ? SnapshotSchema::standard(ingest_gpus) : SnapshotSchema::load(ingest_schema);
            if (ingest_schema.empty() && path.extension() == ".csv")
                schema.delimiter = ',';
            const auto rules = ingest_rules.empty() ? default_rules() : load_rules(ingest_rules);
            HistoryStore history{std::filesystem::path(ingest_history)};
            auto latest = history.latest();
            TimestampMs ts = ingest_ts ? *ingest_ts : file_mtime_ms(path);
            // mtimes may collide; an explicit --timestamp is never adjusted
            if (!ingest_ts && latest && ts <= latest->timestamp)
                ts = latest->timestamp + 1;

            auto parsed = parse_snapshot(text, schema, ts);
            for (const auto& e : parsed.row_errors)
                err << path.string() << ": " << e.message << "\n";

            auto conditioned = condition(parsed.frame, rules, latest.get());
            history.append(conditioned.frame);

            out << "ingested " << parsed.frame.nodes.size() << " nodes at " << ts << " (" << parsed.row_errors.size()
                << " row errors, " << parsed.clamp_count << " clamped values, " << conditioned.changed_nodes.size()
                << " changed)\n";
            out << "alerts: " << conditioned.alerts.size() << "\n";
            for (const auto& a : conditioned.alerts)
                out << "  " << a.node << "\t" << a.rule_id << "\t" << format_number(a.value) << "\t"
                    << to_string(a.severity) << "\n";
            return parsed.row_errors.empty() ? 0 : 1;
        }

        if (*simulate) {
            sim.validate();
            if (sim_ticks < 0 || sim_start < 0)
                throw InputError("--ticks and --start-tick must be >= 0");
            const std::filesystem::path dir(sim_out);
            std::error_code ec;
            std::filesystem::create_directories(dir, ec);
            if (ec)
                throw IoError("cannot create '" + dir.string() + "': " + ec.message());
            const int gpus = sim.gpus_per_node;
            const auto schema = SnapshotSchema::standard(gpus, sim_csv ? ',' : '\t');
            for (std::int64_t t = sim_start; t < sim_start + sim_ticks; ++t) {
                auto frame = simulate_tick(sim, t);
                auto file = dir / ("snapshot_" + pad_tick(t) + (sim_csv ? ".csv" : ".tsv"));
                write_file_atomic(file, serialize_snapshot(frame, schema));
                out << file.string() << "\t" << frame.timestamp << "\n";
            }
            return 0;
        }

        if (*replay) {
            if (replay_from > replay_to)
                throw InputError("--from is after --to");
            if (!std::filesystem::is_directory(replay_history))
                throw IoError("history directory '" + replay_history + "' does not exist");
            HistoryStore history{std::filesystem::path(replay_history)};
            PipelineConfig pcfg;
            if (!replay_scene.empty())
                pcfg.scene = SceneConfig::load(replay_scene);
            if (!replay_rules.empty())
                pcfg.rules = load_rules(replay_rules);
            Pipeline pipeline(pcfg);
            for (const auto& frame : history.range(replay_from, replay_to))
                out << to_json(pipeline.tick(*frame).packet).dump() << "\n";
            return 0;
        }

        if (*stats) {
            auto scene = stats_scene.empty() ? SceneConfig::parse(reference_scene_text()) : SceneConfig::load(stats_scene);
            auto report = build_scene_report(scene);
            out << (stats_json ? format_stats_jsonl(report.naive, report.instanced)
                               : format_stats_table(report.naive, report.instanced));
            return 0;
        }
    } catch (const std::exception& e) {
        err << "dtwin: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace dtwin
