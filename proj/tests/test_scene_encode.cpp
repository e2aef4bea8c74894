#include "doctest.h"

#include "dtwin/encode.hpp"
#include "dtwin/error.hpp"
#include "dtwin/scene.hpp"
#include "dtwin/simulator.hpp"

#include <random>

using namespace dtwin;

namespace {

const MaterialTemplate& power_template()
{
    static const TemplateRegistry reg = TemplateRegistry::standard();
    return reg.at("power_bar");
}

LayoutConfig layout_for(const SnapshotFrame& frame)
{
    std::vector<std::string> names;
    for (const auto& [name, node] : frame.nodes)
        names.push_back(name);
    return LayoutConfig::grid(names, 40);
}

SnapshotFrame sim(int nodes, int gpus, int cpu_nodes, std::int64_t t, std::uint64_t seed = 3)
{
    SimulatorConfig cfg;
    cfg.node_count = nodes;
    cfg.gpus_per_node = gpus;
    cfg.cpu_node_count = cpu_nodes;
    cfg.seed = seed;
    return simulate_tick(cfg, t);
}

} // namespace

TEST_CASE("node base encoder examples")
{
    const auto& p = default_palette();
    auto off = node_base_encode(NodeState::off, 0.7, false);
    CHECK(off.base == Color{0, 0, 0});
    CHECK_FALSE(off.alert_strip);

    auto cold = node_base_encode(NodeState::active, 0.0, false);
    CHECK(cold.base == p.node_base.low);
    CHECK(node_base_encode(NodeState::active, 1.0, false).base == p.node_base.high);

    auto mid = node_base_encode(NodeState::active, 0.5, true);
    CHECK(mid.alert_strip);
    CHECK(mid.base.r == doctest::Approx((0.05 + 1.0) / 2));
    CHECK(mid.base.g == doctest::Approx((0.10 + 0.55) / 2));
    CHECK(mid.base.b == doctest::Approx((0.35 + 0.10) / 2));

    CHECK(node_base_encode(NodeState::idle, 0.9, false).base == p.idle);
}

TEST_CASE("gpu bar encoder examples")
{
    const auto& p = default_palette();
    auto zero = gpu_bar_encode(0.0);
    CHECK(zero.fill == 0.0);
    CHECK(zero.color == p.gpu_bar.low);
    auto full = gpu_bar_encode(1.0);
    CHECK(full.fill == 1.0);
    CHECK(full.color == Color{1, 1, 1});
    auto quarter = gpu_bar_encode(0.25);
    CHECK(quarter.fill == 0.25);
    CHECK(quarter.color.r == doctest::Approx(0.20 + 0.25 * 0.80));
    CHECK(gpu_bar_encode(-1.0).fill == 0.0);
    CHECK(gpu_bar_encode(2.0).fill == 1.0);
}

TEST_CASE("power bar encoder examples")
{
    const auto& t = power_template();
    CHECK(power_bar_encode(0.0, t).fill == 0.0);
    CHECK_FALSE(power_bar_encode(0.0, t).overload);
    CHECK(power_bar_encode(200.0, t).fill == 0.5);
    auto over = power_bar_encode(450.0, t);
    CHECK(over.fill == 1.0);
    CHECK(over.overload);
    CHECK(over.red_from == 0.9);
    CHECK_FALSE(power_bar_encode(360.0, t).overload);
    CHECK(power_bar_encode(360.1, t).overload);

    MaterialTemplate wrong = t;
    wrong.shader_kind = ShaderKind::gpu_bar;
    CHECK_THROWS_AS(power_bar_encode(1.0, wrong), InputError);

    MaterialTemplate bad = t;
    bad.min_w = 500;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = t;
    bad.normalized_large = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("outline encoder examples")
{
    CHECK(outline_encode(70, 85) == 0);
    CHECK(outline_encode(90, 85) == 1);
    CHECK(outline_encode(85, 85) == 0);
}

TEST_CASE("red is reserved for alert, overload and over-tolerance signals")
{
    const auto& p = default_palette();
    for (int i = 0; i <= 1000; ++i) {
        const double x = i / 1000.0;
        for (auto state : {NodeState::active, NodeState::idle, NodeState::off})
            CHECK_FALSE(is_red(node_base_encode(state, x, false).base));
        CHECK_FALSE(is_red(gpu_bar_encode(x).color));
        CHECK_FALSE(is_red(power_bar_encode(x * 500.0, power_template()).color));
        CHECK_FALSE(is_red(p.node_base.sample(x)));
        CHECK_FALSE(is_red(p.gpu_bar.sample(x)));
    }
    CHECK(is_red(p.red));
    CHECK_FALSE(is_red(p.idle));
    CHECK_FALSE(is_red(p.off));
}

TEST_CASE("bar fills are monotone and encoders are pure")
{
    double prev_util = -1, prev_power = -1;
    for (int i = 0; i <= 1000; ++i) {
        const double x = -0.1 + 1.2 * i / 1000.0;
        auto u = gpu_bar_encode(x);
        auto w = power_bar_encode(x * 400.0, power_template());
        CHECK(u.fill >= prev_util);
        CHECK(w.fill >= prev_power);
        prev_util = u.fill;
        prev_power = w.fill;
        CHECK(gpu_bar_encode(x).color == u.color);
        CHECK(power_bar_encode(x * 400.0, power_template()).color == w.color);
    }
}

TEST_CASE("scene size follows the closed-form count")
{
    auto one = sim(1, 2, 0, 0);
    CHECK(frame_to_scene(one, layout_for(one), TemplateRegistry::standard()).size() == 10);

    SnapshotFrame empty;
    CHECK(frame_to_scene(empty, {}, TemplateRegistry::standard()).empty());

    auto big = sim(318, 2, 0, 0);
    auto scene = frame_to_scene(big, layout_for(big), TemplateRegistry::standard());
    CHECK(scene.size() == 318 * (1 + 3 * 2 + 2 + 1));
    CHECK(scene.size() == 3180);

    for (int gpus = 0; gpus <= 4; ++gpus) {
        auto f = sim(7, gpus, 3, 1);
        const std::size_t formula = 7 * (1 + 3 * gpus + gpus + 1) + 3 * 2;
        CHECK(frame_to_scene(f, layout_for(f), TemplateRegistry::standard()).size() == formula);
        CHECK(expected_item_count(f) == formula);
    }
}

TEST_CASE("scene items are well formed")
{
    auto f = sim(3, 2, 1, 5);
    auto scene = frame_to_scene(f, layout_for(f), TemplateRegistry::standard());
    CHECK(std::is_sorted(scene.begin(), scene.end(),
                         [](const RenderItem& a, const RenderItem& b) { return a.item_id < b.item_id; }));
    const auto* util = find_item(scene, "node/node-001/gpu0_util");
    REQUIRE(util);
    CHECK(util->mesh_id == "bar");
    CHECK(util->template_id == "gpu_bar");
    CHECK(util->instance.load == f.nodes.at("node-001").gpus[0].utilization);
    const auto* base = find_item(scene, "node/cpu-001/base");
    REQUIRE(base);
    CHECK(base->template_id == "node_base/cpu");
    CHECK(find_item(scene, "node/cpu-001/gpu0_util") == nullptr);
}

TEST_CASE("alerting nodes get a strip and hot parts get red outlines")
{
    auto f = sim(2, 2, 0, 0);
    auto& node = f.nodes.at("node-001");
    node.state = NodeState::active;
    node.alerts = {"manual"};
    node.node_temp_c = 80;
    node.gpus[1].temp_c = 85; // at tolerance, no outline
    node.gpus[0].temp_c = 86;
    auto scene = frame_to_scene(f, layout_for(f), TemplateRegistry::standard());
    CHECK(find_item(scene, "node/node-001/base")->instance.alert_flag == 1);
    CHECK(find_item(scene, "node/node-001/outline")->instance.outline_enabled == 1);
    CHECK(is_red(find_item(scene, "node/node-001/outline")->instance.color));
    CHECK(find_item(scene, "node/node-001/gpu0_outline")->instance.outline_enabled == 1);
    CHECK(find_item(scene, "node/node-001/gpu1_outline")->instance.outline_enabled == 0);
    CHECK_FALSE(is_red(find_item(scene, "node/node-001/gpu1_outline")->instance.color));
}

TEST_CASE("missing placement is a layout error naming the node")
{
    auto f = sim(3, 1, 0, 0);
    auto layout = layout_for(f);
    layout.placements.erase("node-002");
    try {
        frame_to_scene(f, layout, TemplateRegistry::standard());
        FAIL("expected LayoutError");
    } catch (const LayoutError& e) {
        CHECK(std::string(e.what()).find("node-002") != std::string::npos);
    }
}

TEST_CASE("worker partitioning does not change the scene")
{
    auto f = sim(97, 2, 13, 9);
    auto layout = layout_for(f);
    auto reg = TemplateRegistry::standard();
    auto serial = frame_to_scene(f, layout, reg, default_palette(), 1);
    for (int w : {2, 3, 8, 200})
        CHECK(frame_to_scene(f, layout, reg, default_palette(), w) == serial);
}

TEST_CASE("diff of identical scenes is empty")
{
    auto f = sim(20, 2, 2, 0);
    auto scene = frame_to_scene(f, layout_for(f), TemplateRegistry::standard());
    auto d = diff_updates(scene, scene);
    CHECK_FALSE(d.structural_change);
    CHECK(d.updates.empty());
}

TEST_CASE("one changed load yields one update with one property")
{
    auto f = sim(20, 2, 0, 0);
    auto layout = layout_for(f);
    auto reg = TemplateRegistry::standard();
    auto a = frame_to_scene(f, layout, reg);
    auto b = a;
    for (auto& item : b)
        if (item.item_id == "node/node-004/gpu1_util")
            item.instance.load = item.instance.load == 0.5 ? 0.25 : 0.5;
    auto d = diff_updates(a, b);
    REQUIRE(d.updates.size() == 1);
    CHECK(d.updates[0].item_id == "node/node-004/gpu1_util");
    CHECK(d.updates[0].props.size() == 1);
    CHECK(d.updates[0].props.count("load") == 1);
    CHECK(apply_updates(a, d.updates) == b);
}

TEST_CASE("random property mutations round-trip through diff and apply")
{
    std::mt19937_64 rng(91);
    auto f = sim(50, 2, 0, 0);
    auto a = frame_to_scene(f, layout_for(f), TemplateRegistry::standard());
    REQUIRE(a.size() == 500);
    for (int trial = 0; trial < 20; ++trial) {
        auto b = a;
        std::size_t touched = 0;
        for (auto& item : b) {
            if (rng() % 3)
                continue;
            ++touched;
            const auto id = instance_property_ids[rng() % instance_property_ids.size()];
            set_property(item.instance, id, std::uniform_real_distribution<double>(0, 1)(rng) > 0.5 ? 1.0 : 0.0);
        }
        auto d = diff_updates(a, b);
        CHECK_FALSE(d.structural_change);
        CHECK(d.updates.size() <= touched);
        for (const auto& u : d.updates)
            CHECK_FALSE(u.props.empty());
        CHECK(apply_updates(a, d.updates) == b);
    }
}

TEST_CASE("differing item sets signal a structural change")
{
    auto a_frame = sim(5, 2, 0, 0);
    auto b_frame = sim(6, 2, 0, 0);
    auto reg = TemplateRegistry::standard();
    auto a = frame_to_scene(a_frame, layout_for(a_frame), reg);
    auto b = frame_to_scene(b_frame, layout_for(b_frame), reg);
    CHECK(diff_updates(a, b).structural_change);

    auto moved = a;
    moved[0].transform.position[0] += 1.0;
    CHECK(diff_updates(a, moved).structural_change);

    auto renamed = a;
    renamed.back().item_id += "x";
    CHECK(diff_updates(a, renamed).structural_change);

    CHECK_THROWS_AS(apply_updates(a, {{"node/none/base", 0, {{"load", 1.0}}}}), InputError);
    CHECK_THROWS_AS(apply_updates(a, {{a[0].item_id, 0, {{"bogus", 1.0}}}}), InputError);
}
