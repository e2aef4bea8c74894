// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "oracles.hpp"

#include "dtwin/alerts.hpp"
#include "dtwin/assoc_store.hpp"
#include "dtwin/batch.hpp"
#include "dtwin/config.hpp"
#include "dtwin/encode.hpp"
#include "dtwin/error.hpp"
#include "dtwin/history.hpp"
#include "dtwin/pipeline.hpp"
#include "dtwin/scene.hpp"
#include "dtwin/simulator.hpp"
#include "dtwin/snapshot.hpp"
#include "dtwin/wire.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace dtwin;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::string src_dir = DTWIN_SOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

struct RandomScenes {
    std::vector<Scene> scenes;
    std::vector<MeshLibrary> libraries;
    std::vector<std::vector<std::int64_t>> mesh_tris;
};

const RandomScenes& random_scenes()
{
    static const RandomScenes data = [] {
        RandomScenes d;
        std::mt19937_64 rng(20240501);
        for (int i = 0; i < 200; ++i) {
            const int meshes = 1 + static_cast<int>(rng() % 10);
            const int templates = 1 + static_cast<int>(rng() % 8);
            const std::size_t items = i == 0 ? 10000 : rng() % 10001;
            d.scenes.push_back(oracle::random_scene(rng, items, meshes, templates));
            MeshLibrary lib;
            std::vector<std::int64_t> tris;
            for (int m = 0; m < meshes; ++m) {
                tris.push_back(1 + static_cast<std::int64_t>(rng() % 5000));
                lib.add("mesh" + std::to_string(m), tris.back());
            }
            d.libraries.push_back(lib);
            d.mesh_tris.push_back(tris);
        }
        return d;
    }();
    return data;
}

Outcome batching_identity()
{
    const auto& data = random_scenes();
    const auto t0 = Clock::now();
    std::size_t agree = 0;
    for (const auto& scene : data.scenes) {
        const auto batches = plan_batches(scene);
        const auto groups = oracle::group_by(scene);
        bool same = batches.size() == groups.size();
        auto it = groups.begin();
        for (std::size_t b = 0; same && b < batches.size(); ++b, ++it) {
            same = batches[b].mesh_id == it->first.first && batches[b].template_id == it->first.second &&
                   batches[b].instances.size() == it->second.size();
            for (std::size_t k = 0; same && k < it->second.size(); ++k)
                same = batches[b].instances[k].item_id == it->second[k];
        }
        std::set<std::pair<std::string, std::string>> pairs;
        for (const auto& item : scene)
            pairs.insert({item.mesh_id, item.template_id});
        same = same && batches.size() == pairs.size();
        agree += same;
    }
    const double ms = ms_since(t0);
    return {agree == data.scenes.size() && ms < 10'000.0,
            std::to_string(agree) + "/" + std::to_string(data.scenes.size()) + " scenes agree, " + fmt("%.0f ms", ms)};
}

Outcome instancing_dominance()
{
    const auto report = build_scene_report(SceneConfig::load(src_dir + "/configs/reference.cfg"));
    const double ratio = static_cast<double>(report.instanced.batch_count) / static_cast<double>(report.naive.batch_count);
    return {report.instanced.batch_count * 2 <= report.naive.batch_count,
            "instanced " + std::to_string(report.instanced.batch_count) + " vs naive " +
                std::to_string(report.naive.batch_count) + fmt(" (ratio %.4f)", ratio)};
}

Outcome triangle_accounting()
{
    const auto& data = random_scenes();
    std::size_t exact = 0;
    for (std::size_t i = 0; i < data.scenes.size(); ++i) {
        std::int64_t per_item = 0;
        for (const auto& item : data.scenes[i])
            per_item += data.mesh_tris[i][static_cast<std::size_t>(std::stoi(item.mesh_id.substr(4)))];
        const auto inst = scene_stats(plan_batches(data.scenes[i]), data.libraries[i]);
        const auto naive = naive_stats(data.scenes[i], data.libraries[i]);
        exact += inst.triangle_count == per_item && naive.triangle_count == per_item;
    }
    // the reference scene too
    const auto cfg = SceneConfig::load(src_dir + "/configs/reference.cfg");
    const auto report = build_scene_report(cfg);
    std::int64_t ref = 0;
    for (const auto& item : report.items)
        ref += cfg.meshes.all().at(item.mesh_id);
    const bool ref_ok = report.instanced.triangle_count == ref;
    return {exact == data.scenes.size() && ref_ok,
            std::to_string(exact) + "/" + std::to_string(data.scenes.size()) + " random scenes exact, reference " +
                std::to_string(report.instanced.triangle_count) + (ref_ok ? " exact" : " MISMATCH")};
}

Outcome encoding_grid()
{
    const Palette& p = default_palette();
    const auto registry = TemplateRegistry::standard();
    const auto& power = registry.at("power_bar");
    const auto& node_outline = registry.at("outline/node");
    const auto& gpu_outline = registry.at("outline/gpu");
    std::vector<std::string> failures;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok && failures.size() < 5)
            failures.push_back(what);
    };

    // endpoints, bit-exact
    expect(node_base_encode(NodeState::active, 0.0, false).base == p.node_base.low, "node_base low stop");
    expect(node_base_encode(NodeState::active, 1.0, false).base == p.node_base.high, "node_base high stop");
    expect(gpu_bar_encode(0.0).color == p.gpu_bar.low, "gpu_bar low stop");
    expect(gpu_bar_encode(1.0).color == p.gpu_bar.high, "gpu_bar high stop");
    expect(power_bar_encode(power.min_w, power).color == p.gpu_bar.low, "power_bar low stop");
    expect(power_bar_encode(power.max_w, power).color == p.gpu_bar.high, "power_bar high stop");

    const int n = 1000;
    double prev_util = -1.0, prev_mem = -1.0, prev_power = -1.0;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);

        // node base: no red without an alert, in any state
        for (auto state : {NodeState::active, NodeState::idle, NodeState::off}) {
            auto e = node_base_encode(state, t, false);
            expect(!is_red(e.base) && !e.alert_strip, "node_base red at " + std::to_string(t));
            expect(node_base_encode(state, t, false).base == e.base, "node_base purity");
        }

        auto util = gpu_bar_encode(t);
        expect(util.fill >= prev_util, "gpu util fill not monotone");
        expect(!is_red(util.color), "gpu util red");
        prev_util = util.fill;

        GpuTelemetry g;
        g.mem_capacity_bytes = 94.0 * 1024 * 1024 * 1024;
        g.mem_used_bytes = t * g.mem_capacity_bytes;
        auto mem = gpu_bar_encode(g.mem_fraction());
        expect(!is_red(mem.color), "gpu mem red");
        expect(mem.fill >= prev_mem, "gpu mem fill not monotone");
        prev_mem = mem.fill;

        const double draw = power.min_w - 50.0 + t * (power.max_w - power.min_w + 100.0);
        auto pw = power_bar_encode(draw, power);
        expect(pw.fill >= prev_power, "power fill not monotone");
        expect(!is_red(pw.color), "power bar base color red");
        expect(pw.overload == (pw.fill > power.normalized_large), "overload flag off its region");
        prev_power = pw.fill;

        const double temp = 20.0 + t * 100.0;
        for (const auto* tmpl : {&node_outline, &gpu_outline}) {
            const int on = outline_encode(temp, tmpl->tolerance_c);
            expect(on == (temp > tmpl->tolerance_c ? 1 : 0), "outline flag off its region");
        }
    }

    // boundaries
    const double at_large = power.min_w + power.normalized_large * (power.max_w - power.min_w);
    expect(power_bar_encode(at_large, power).fill == power.normalized_large, "normalized_large not hit exactly");
    expect(!power_bar_encode(at_large, power).overload, "overload at normalized_large");
    expect(outline_encode(node_outline.tolerance_c, node_outline.tolerance_c) == 0, "node outline at tolerance");
    expect(outline_encode(gpu_outline.tolerance_c, gpu_outline.tolerance_c) == 0, "gpu outline at tolerance");

    // red only where reserved, across whole compiled scenes
    SimulatorConfig sim;
    sim.node_count = 318;
    sim.cpu_node_count = 20;
    sim.seed = 4;
    std::size_t red_items = 0, overloaded = 0;
    for (std::int64_t tick = 0; tick < 20; ++tick) {
        auto raw = simulate_tick(sim, tick);
        // push a slice of the fleet across every threshold so reserved red actually appears
        std::size_t k = 0;
        for (auto& [name, node] : raw.nodes) {
            const double heat = static_cast<double>((k++ + static_cast<std::size_t>(tick)) % 7) / 6.0;
            node.node_temp_c = 60.0 + 30.0 * heat;
            for (auto& gpu : node.gpus) {
                gpu.temp_c = 70.0 + 30.0 * heat;
                if (node.state != NodeState::off)
                    gpu.power_draw_w = power.max_w * (0.7 + 0.4 * heat);
            }
        }
        auto frame = condition(raw, default_rules(), nullptr).frame;
        std::vector<std::string> names;
        for (const auto& [name, node] : frame.nodes)
            names.push_back(name);
        for (const auto& item : frame_to_scene(frame, LayoutConfig::grid(names, 40), registry)) {
            overloaded += item.instance.overload_flag;
            if (!is_red(item.instance.color))
                continue;
            ++red_items;
            const bool allowed = item.instance.outline_enabled || item.instance.overload_flag || item.instance.alert_flag;
            expect(allowed, "unreserved red on " + item.item_id);
        }
    }

    expect(red_items > 0 && overloaded > 0, "scene sweep never reached a reserved signal");
    std::string detail = std::to_string(n) + " points per encoder, scene sweep: " + std::to_string(red_items) +
                         " red outlines, " + std::to_string(overloaded) + " overloaded power bars";
    for (const auto& f : failures)
        detail += "; " + f;
    return {failures.empty(), detail};
}

Outcome delta_round_trip()
{
    std::mt19937_64 rng(555);
    const auto registry = TemplateRegistry::standard();
    std::size_t ok = 0, empty_ok = 0, updates = 0;
    const int pairs = 500;
    for (int i = 0; i < pairs; ++i) {
        SimulatorConfig sim;
        sim.node_count = 1 + static_cast<int>(rng() % 60);
        sim.gpus_per_node = static_cast<int>(rng() % 5);
        sim.cpu_node_count = static_cast<int>(rng() % 6);
        sim.seed = rng();
        const auto ta = static_cast<std::int64_t>(rng() % 1000);
        const auto tb = ta + 1 + static_cast<std::int64_t>(rng() % 64);
        auto fa = condition(simulate_tick(sim, ta), default_rules(), nullptr).frame;
        auto fb = condition(simulate_tick(sim, tb), default_rules(), nullptr).frame;
        std::vector<std::string> names;
        for (const auto& [name, node] : fa.nodes)
            names.push_back(name);
        const auto layout = LayoutConfig::grid(names, 40);
        const auto a = frame_to_scene(fa, layout, registry);
        const auto b = frame_to_scene(fb, layout, registry);
        const auto d = diff_updates(a, b);
        updates += d.updates.size();
        ok += !d.structural_change && apply_updates(a, d.updates) == b;
        const auto same = diff_updates(a, a);
        empty_ok += !same.structural_change && same.updates.empty();
    }
    return {ok == pairs && empty_ok == pairs,
            std::to_string(ok) + "/" + std::to_string(pairs) + " pairs round-trip, " + std::to_string(empty_ok) + "/" +
                std::to_string(pairs) + " identical pairs empty, " + std::to_string(updates) + " updates"};
}

Outcome pipeline_throughput()
{
    PipelineConfig cfg;
    cfg.scene.simulator.node_count = 318;
    cfg.scene.simulator.gpus_per_node = 2;
    cfg.scene.simulator.cpu_node_count = 0;
    Pipeline pipeline(cfg);
    std::vector<double> times;
    std::size_t gpus = 0;
    for (std::int64_t t = 0; t < 51; ++t) {
        auto frame = simulate_tick(cfg.scene.simulator, t);
        if (t == 0)
            for (const auto& [name, node] : frame.nodes)
                gpus += node.gpus.size();
        const auto t0 = Clock::now();
        pipeline.tick(frame);
        times.push_back(ms_since(t0));
    }
    const double first = times.front();
    const double worst = *std::max_element(times.begin(), times.end());
    std::sort(times.begin(), times.end());
    const double median = times[times.size() / 2];
    return {worst < 50.0 && gpus == 636,
            "318 nodes / " + std::to_string(gpus) + " GPUs, 51 ticks: first " + fmt("%.2f ms", first) + ", median " +
                fmt("%.2f ms", median) + ", max " + fmt("%.2f ms", worst)};
}

Outcome store_oracle()
{
    std::mt19937_64 rng(808);
    AssocStore store;
    oracle::TripleList list;
    std::vector<std::pair<std::string, std::string>> keys;
    const std::vector<std::string> cols = {"cpu_load", "node_temp_c", "state", "user", "job_id"};
    while (store.size() < 10'000) {
        char row[32];
        std::snprintf(row, sizeof row, "%s-%03d", rng() % 4 ? "node" : "cpu", static_cast<int>(rng() % 500));
        std::string col = rng() % 3 ? "gpu" + std::to_string(rng() % 4) + "." +
                                          std::array<const char*, 4>{"util", "temp_c", "power_w", "mem_used"}[rng() % 4]
                                    : cols[rng() % cols.size()];
        Value v = rng() % 5 ? Value(static_cast<double>(rng() % 1000) / 10.0) : Value("alice");
        store.insert(row, col, v);
        list.insert(row, col, v);
        keys.emplace_back(row, col);
    }

    auto globify = [&](const std::string& key) {
        std::string out;
        for (std::size_t i = 0; i < key.size(); ++i) {
            switch (rng() % 12) {
            case 0: out += '?'; break;
            case 1: out += '*'; i += rng() % 3; break;
            case 2: out += "[" + std::string(1, key[i]) + "x]"; break;
            case 3: out += "[!q]"; break;
            default:
                if (key[i] == '*' || key[i] == '?' || key[i] == '[' || key[i] == '\\')
                    out += '\\';
                out += key[i];
            }
        }
        return out.empty() ? std::string("*") : out;
    };

    int agree = 0;
    std::size_t hits = 0;
    for (int q = 0; q < 1000; ++q) {
        const auto& key = keys[rng() % keys.size()];
        std::string rp = rng() % 6 ? globify(key.first) : "*";
        std::string cp = rng() % 6 ? globify(key.second) : "*";
        if (rng() % 10 == 0)
            rp = "node-1??";
        auto got = oracle::flatten(store.query(rp, cp));
        auto want = list.query(rp, cp);
        hits += want.size();
        agree += got == want;
    }
    return {agree == 1000, std::to_string(store.size()) + " triples, " + std::to_string(agree) +
                               "/1000 glob pairs agree, " + std::to_string(hits) + " total matches"};
}

Outcome replay_determinism()
{
    const auto root = fs::temp_directory_path() / ("dtwin_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root / "snapshots");

    SimulatorConfig sim;
    sim.node_count = 318;
    sim.cpu_node_count = 24;
    sim.seed = 2025;
    const auto schema = SnapshotSchema::standard(sim.gpus_per_node);
    const int ticks = 120;

    // record: live run into memory while writing snapshot files
    HistoryStore live;
    std::vector<std::pair<fs::path, TimestampMs>> recorded;
    for (std::int64_t t = 0; t < ticks; ++t) {
        auto frame = simulate_tick(sim, t);
        const auto path = root / "snapshots" / ("snapshot_" + std::to_string(t) + ".tsv");
        write_file_atomic(path, serialize_snapshot(frame, schema));
        recorded.emplace_back(path, frame.timestamp);
        live.append(condition(frame, default_rules(), live.latest().get()).frame);
    }

    // re-ingest the files into a persisted store, then reopen it cold
    {
        HistoryStore ingest(root / "history");
        for (const auto& [path, ts] : recorded) {
            auto parsed = parse_snapshot(read_file(path), schema, ts);
            ingest.append(condition(parsed.frame, default_rules(), ingest.latest().get()).frame);
        }
    }
    HistoryStore reopened(root / "history");

    auto render = [](const HistoryStore& h, TimestampMs t) {
        try {
            const auto f = h.at(t);
            return to_json(*f).dump() + "\n" + frame_to_triples(*f).serialize();
        } catch (const HistoryError& e) {
            return std::string("error: ") + e.what();
        }
    };

    std::mt19937_64 rng(31337);
    const TimestampMs first = recorded.front().second;
    const TimestampMs last = recorded.back().second;
    int identical = 0;
    for (int i = 0; i < 100; ++i) {
        const TimestampMs probe = first - 500 + static_cast<TimestampMs>(rng() % static_cast<std::uint64_t>(last - first + 1500));
        const auto a = render(live, probe);
        identical += a == render(reopened, probe) && a.rfind("error", 0) != 0;
    }
    fs::remove_all(root);
    // probes before the first frame legitimately error; count those separately
    std::mt19937_64 rng2(31337);
    int expected_hits = 0;
    for (int i = 0; i < 100; ++i) {
        const TimestampMs probe = first - 500 + static_cast<TimestampMs>(rng2() % static_cast<std::uint64_t>(last - first + 1500));
        expected_hits += probe >= first;
    }
    return {identical == expected_hits && expected_hits > 0,
            std::to_string(identical) + "/" + std::to_string(expected_hits) + " in-range probes byte-identical (" +
                std::to_string(100 - expected_hits) + " probes before first frame), " + std::to_string(ticks) +
                " frames of " + std::to_string(sim.node_count + sim.cpu_node_count) + " nodes"};
}

Outcome stats_report()
{
    const auto golden = read_file(src_dir + "/tests/golden/reference_stats.txt");
    const auto report = build_scene_report(SceneConfig::load(src_dir + "/configs/reference.cfg"));
    const bool library = format_stats_table(report.naive, report.instanced) == golden;

    std::string out;
    const std::string cmd = std::string(DTWIN_CLI_PATH) + " stats --scene " + src_dir + "/configs/reference.cfg";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    int code = -1;
    if (pipe) {
        std::array<char, 4096> buf{};
        std::size_t n;
        while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
            out.append(buf.data(), n);
        const int status = ::pclose(pipe);
        code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    const bool cli = code == 0 && out == golden;
    return {library && cli, std::string("library table ") + (library ? "matches" : "differs") + ", `dtwin stats` " +
                                (cli ? "matches" : "differs (exit " + std::to_string(code) + ")")};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"batching identity", batching_identity},
        {"instancing dominance", instancing_dominance},
        {"triangle accounting", triangle_accounting},
        {"encoding grid", encoding_grid},
        {"delta round-trip", delta_round_trip},
        {"pipeline throughput", pipeline_throughput},
        {"store/oracle equivalence", store_oracle},
        {"replay determinism", replay_determinism},
        {"stats report", stats_report},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
