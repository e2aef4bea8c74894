#include "dtwin/encode.hpp"

#include "dtwin/error.hpp"

#include <algorithm>
#include <cmath>

namespace dtwin {

Color Gradient::sample(double t) const
{
    t = std::clamp(t, 0.0, 1.0);
    // (1-t)*a + t*b hits both endpoints exactly
    auto mix = [t](double a, double b) { return (1.0 - t) * a + t * b; };
    return {mix(low.r, high.r), mix(low.g, high.g), mix(low.b, high.b)};
}

const Palette& default_palette()
{
    static const Palette palette;
    return palette;
}

bool is_red(const Color& c)
{
    return c.r >= 0.8 && c.g <= 0.3 && c.b <= 0.3;
}

std::string_view to_string(ShaderKind kind)
{
    switch (kind) {
    case ShaderKind::node_base: return "node_base";
    case ShaderKind::gpu_bar: return "gpu_bar";
    case ShaderKind::power_bar: return "power_bar";
    case ShaderKind::outline: return "outline";
    }
    return "node_base";
}

void MaterialTemplate::validate() const
{
    if (template_id.empty())
        throw ConfigError("material template with empty id");
    if (shader_kind == ShaderKind::power_bar) {
        if (!(min_w < max_w))
            throw ConfigError("template '" + template_id + "': min_w must be < max_w");
        if (!(normalized_large > 0.0 && normalized_large <= 1.0))
            throw ConfigError("template '" + template_id + "': normalized_large must lie in (0,1]");
    }
    if (shader_kind == ShaderKind::outline && !std::isfinite(tolerance_c))
        throw ConfigError("template '" + template_id + "': tolerance_c must be finite");
}

NodeBaseEncoding node_base_encode(NodeState state, double cpu_load, bool has_alert, const Palette& palette)
{
    NodeBaseEncoding out;
    out.alert_strip = has_alert;
    switch (state) {
    case NodeState::off: out.base = palette.off; break;
    case NodeState::idle: out.base = palette.idle; break;
    case NodeState::active: out.base = palette.node_base.sample(cpu_load); break;
    }
    return out;
}

BarEncoding gpu_bar_encode(double load, const Palette& palette)
{
    const double fill = std::clamp(load, 0.0, 1.0);
    return {fill, palette.gpu_bar.sample(fill)};
}

PowerBarEncoding power_bar_encode(double draw_w, const MaterialTemplate& power_template, const Palette& palette)
{
    if (power_template.shader_kind != ShaderKind::power_bar)
        throw InputError("power_bar_encode: template '" + power_template.template_id + "' is not a power_bar template");
    const double span = power_template.max_w - power_template.min_w;
    const double normalized = std::clamp((draw_w - power_template.min_w) / span, 0.0, 1.0);
    PowerBarEncoding out;
    out.fill = normalized;
    out.color = palette.gpu_bar.sample(normalized);
    out.overload = normalized > power_template.normalized_large;
    out.red_from = power_template.normalized_large;
    return out;
}

int outline_encode(double temp_c, double tolerance_c)
{
    return temp_c > tolerance_c ? 1 : 0;
}

} // namespace dtwin
