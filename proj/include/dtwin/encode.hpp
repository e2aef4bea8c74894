#pragma once

#include "dtwin/telemetry.hpp"

#include <string>

namespace dtwin {

struct Color {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    bool operator==(const Color&) const = default;
};

/// Two-stop linear gradient in sRGB. Sampling at 0 and 1 returns the stops exactly.
struct Gradient {
    Color low;
    Color high;

    Color sample(double t) const;
};

/// Reserved colors and gradient stops used by every encoder.
struct Palette {
    Gradient node_base{{0.05, 0.10, 0.35}, {1.0, 0.55, 0.10}}; ///< dark blue -> orange
    Gradient gpu_bar{{0.20, 0.05, 0.30}, {1.0, 1.0, 1.0}};     ///< dark purple -> white
    Color idle{0.5, 0.5, 0.5};
    Color off{0.0, 0.0, 0.0};
    Color red{1.0, 0.0, 0.0};
    Color bar_background{0.0, 0.0, 0.0};
};

const Palette& default_palette();

/// Region of color space treated as "red" by the red-reservation rule.
bool is_red(const Color& c);

enum class ShaderKind { node_base, gpu_bar, power_bar, outline };

std::string_view to_string(ShaderKind kind);

/// A shader plus its per-material parameters; items sharing a template_id may batch.
struct MaterialTemplate {
    std::string template_id;
    ShaderKind shader_kind = ShaderKind::node_base;
    std::string base_texture_id;  ///< node_base
    double min_w = 0.0;           ///< power_bar
    double max_w = 400.0;         ///< power_bar
    double normalized_large = 0.9; ///< power_bar, in (0,1]
    double outline_thickness = 0.02;
    double outline_proportion = 1.05;
    double tolerance_c = 85.0; ///< outline: temperature above which the outline shows

    /// Throws ConfigError when min_w >= max_w or normalized_large is outside (0,1].
    void validate() const;

    bool operator==(const MaterialTemplate&) const = default;
};

struct NodeBaseEncoding {
    Color base;
    bool alert_strip = false;
};

struct BarEncoding {
    double fill = 0.0;
    Color color;
};

struct PowerBarEncoding {
    double fill = 0.0;
    Color color;
    bool overload = false;
    /// Fill fraction where the red overload segment starts (normalized_large).
    double red_from = 1.0;
};

NodeBaseEncoding node_base_encode(NodeState state, double cpu_load, bool has_alert,
                                  const Palette& palette = default_palette());

BarEncoding gpu_bar_encode(double load, const Palette& palette = default_palette());

/// Throws InputError unless the template is a power_bar template.
PowerBarEncoding power_bar_encode(double draw_w, const MaterialTemplate& power_template,
                                  const Palette& palette = default_palette());

/// 1 iff temp_c > tolerance_c.
int outline_encode(double temp_c, double tolerance_c);

} // namespace dtwin
