#pragma once

#include "drnav/geometry.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace drnav {

enum class GateShape { square, circle, hex };
enum class Direction { ccw, cw };
enum class TextureFamily { train, test };

/// Texture seeds of the two families live in disjoint ranges.
inline constexpr std::uint32_t kTextureSeedSpan = 1u << 30;
inline std::uint32_t texture_seed_base(TextureFamily f) { return f == TextureFamily::train ? 0u : kTextureSeedSpan; }
inline TextureFamily texture_family_of(std::uint32_t seed)
{
    return seed < kTextureSeedSpan ? TextureFamily::train : TextureFamily::test;
}

/// Translation-only oscillation: nominal + amplitude * sin(2 pi t / period + phase) * axis.
struct GateMotion {
    Vec3 axis = Vec3::UnitY();
    double amplitude = 0.0;
    double period = 6.0;
    double phase = 0.0;
};

/// A racing gate. The pose x-axis is the traversal direction; y and z span
/// the gate plane (y left, z up).
struct Gate {
    Pose pose;
    Vec3 nominal = Vec3::Zero();  ///< rest position, used by the motion law
    double width = 1.4;
    double height = 1.4;
    double frame_band = 0.3;
    GateShape shape = GateShape::square;
    std::uint32_t texture_seed = 3;
    std::optional<GateMotion> motion;

    Vec3 normal() const { return pose.orientation * Vec3::UnitX(); }
};

struct Bounds {
    Vec3 min = Vec3(-14.0, -14.0, 0.0);
    Vec3 max = Vec3(14.0, 14.0, 6.0);

    bool contains(const Vec3& p) const
    {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
};

struct World {
    std::vector<Gate> gates;  ///< in traversal order
    Bounds bounds;
    std::uint32_t floor_texture = 1;
    std::uint32_t wall_texture = 2;
    double illumination = 1.0;
    Direction direction = Direction::ccw;
    double v_max = 6.0;  ///< episode speed limit for the global and local trajectories

    std::vector<Vec3> gate_centers() const
    {
        std::vector<Vec3> c;
        c.reserve(gates.size());
        for (const auto& g : gates) c.push_back(g.pose.position);
        return c;
    }
};

// ---------------------------------------------------------------------------
// Gate polygons

/// Convex aperture outline in gate-plane coordinates (y, z), counter-clockwise.
/// `grow` inflates both half extents, giving the outer edge of the frame band.
inline std::vector<Eigen::Vector2d> gate_outline(const Gate& g, double grow = 0.0)
{
    const double a = 0.5 * g.width + grow, b = 0.5 * g.height + grow;
    std::vector<Eigen::Vector2d> pts;
    switch (g.shape) {
    case GateShape::square:
        pts = {{a, -b}, {a, b}, {-a, b}, {-a, -b}};
        break;
    case GateShape::circle:
        for (int i = 0; i < 16; ++i) {
            const double t = 2 * kPi * i / 16;
            pts.emplace_back(a * std::cos(t), b * std::sin(t));
        }
        break;
    case GateShape::hex: {
        const double bv = b / std::sin(kPi / 3);  // flat top and bottom at +-b
        for (int i = 0; i < 6; ++i) {
            const double t = 2 * kPi * i / 6;
            pts.emplace_back(a * std::cos(t), bv * std::sin(t));
        }
        break;
    }
    }
    return pts;
}

inline bool inside_convex(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p)
{
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Eigen::Vector2d e = poly[(i + 1) % poly.size()] - poly[i];
        const Eigen::Vector2d r = p - poly[i];
        if (e.x() * r.y() - e.y() * r.x() < 0.0) return false;
    }
    return true;
}

enum class GateZone { outside, aperture, frame };

/// Classifies a point in gate-plane coordinates.
inline GateZone gate_zone(const Gate& g, const Eigen::Vector2d& yz)
{
    if (inside_convex(gate_outline(g), yz)) return GateZone::aperture;
    if (inside_convex(gate_outline(g, g.frame_band), yz)) return GateZone::frame;
    return GateZone::outside;
}

// ---------------------------------------------------------------------------
// Dynamic gates

inline Vec3 gate_position_at(const Gate& g, double t)
{
    if (!g.motion || g.motion->amplitude == 0.0) return g.nominal;
    const auto& m = *g.motion;
    return g.nominal + m.amplitude * std::sin(2 * kPi * t / m.period + m.phase) * m.axis;
}

/// World at time t. Static gates are untouched; orientation is never changed.
inline World update_gates(const World& world, double t)
{
    if (t < 0.0) throw Error("update_gates: negative time");
    World out = world;
    for (auto& g : out.gates)
        if (g.motion) g.pose.position = gate_position_at(g, t);
    return out;
}

// ---------------------------------------------------------------------------
// Gate events

enum class EventKind { none, passed, crashed };
enum class CrashCause { none, frame, floor, bounds };

struct GateEvent {
    EventKind kind = EventKind::none;
    int gate_index = -1;
    CrashCause cause = CrashCause::none;
};

namespace detail {

struct PlaneCrossing {
    bool crossed = false;
    bool forward = false;
    Eigen::Vector2d yz = Eigen::Vector2d::Zero();
};

inline PlaneCrossing cross_gate_plane(const Gate& g, const Vec3& a, const Vec3& b)
{
    const Vec3 n = g.normal();
    const double sa = n.dot(a - g.pose.position), sb = n.dot(b - g.pose.position);
    PlaneCrossing c;
    if ((sa < 0.0 && sb >= 0.0) || (sa >= 0.0 && sb < 0.0)) {
        c.crossed = true;
        c.forward = sa < 0.0;
        const Vec3 hit = a + (sa / (sa - sb)) * (b - a);
        const Vec3 local = g.pose.to_body(hit);
        c.yz = {local.y(), local.z()};
    }
    return c;
}

}  // namespace detail

/// Classifies the motion p_prev -> p_new against the world.
///
/// Crossing the next gate's plane forward inside the aperture is a pass.
/// Crossing any frame band (any gate, either direction), touching the floor
/// or leaving the bounds is a crash.
inline GateEvent detect_gate_event(const Vec3& p_prev, const Vec3& p_new, const World& world, int next_gate)
{
    if (next_gate < 0 || next_gate >= static_cast<int>(world.gates.size())) throw Error("detect_gate_event: bad gate index");
    if (p_new.z() <= world.bounds.min.z()) return {EventKind::crashed, next_gate, CrashCause::floor};
    if (!world.bounds.contains(p_new)) return {EventKind::crashed, next_gate, CrashCause::bounds};

    GateEvent result;
    for (int i = 0; i < static_cast<int>(world.gates.size()); ++i) {
        const Gate& g = world.gates[static_cast<std::size_t>(i)];
        const auto c = detail::cross_gate_plane(g, p_prev, p_new);
        if (!c.crossed) continue;
        const GateZone z = gate_zone(g, c.yz);
        if (z == GateZone::frame) return {EventKind::crashed, i, CrashCause::frame};
        if (i == next_gate && c.forward && z == GateZone::aperture) result = {EventKind::passed, i, CrashCause::none};
    }
    return result;
}

// ---------------------------------------------------------------------------
// Track layout and randomization

struct RandomizationSpec {
    bool background_texture = true;
    bool gate_texture = true;
    bool gate_shape = true;
    bool illumination = true;
    bool gate_position = true;
    bool direction = true;
    bool v_max = true;
    double jitter_max = 0.0;  ///< m, radius of the gate-position ball
    TextureFamily texture_family = TextureFamily::train;

    static RandomizationSpec none()
    {
        RandomizationSpec s;
        s.background_texture = s.gate_texture = s.gate_shape = s.illumination = false;
        s.gate_position = s.direction = s.v_max = false;
        return s;
    }
};

inline const std::array<std::string, 7>& randomization_factor_names()
{
    static const std::array<std::string, 7> names{"background_texture", "gate_texture", "gate_shape", "illumination",
                                                  "gate_position",      "direction",    "v_max"};
    return names;
}

inline bool& randomization_flag(RandomizationSpec& s, const std::string& name)
{
    if (name == "background_texture") return s.background_texture;
    if (name == "gate_texture") return s.gate_texture;
    if (name == "gate_shape") return s.gate_shape;
    if (name == "illumination") return s.illumination;
    if (name == "gate_position") return s.gate_position;
    if (name == "direction") return s.direction;
    if (name == "v_max") return s.v_max;
    throw Error("unknown randomization factor '" + name + "'");
}

struct TrackLayout {
    int gate_count = 7;
    double radius = 8.0;
    double height = 1.5;
    double gate_width = 1.4;
    double gate_height = 1.4;
    double frame_band = 0.3;
    double min_gate_height = 1.3;  ///< jittered centers are clamped into [min, max]
    double max_gate_height = 4.0;
    Bounds bounds;
    double nominal_v_max = 6.0;
    double v_max_lo = 4.0;
    double v_max_hi = 8.0;
    double illumination_lo = 0.5;
    double illumination_hi = 1.5;
    bool dynamic = false;
    double motion_amplitude_max = 1.5;
    double motion_period_lo = 4.0;
    double motion_period_hi = 8.0;
};

/// Draws one world. Every random quantity is drawn in a fixed order whether
/// or not its factor is enabled, so disabling one factor leaves the others'
/// draws unchanged for the same seed.
inline World randomize_world(const RandomizationSpec& spec, std::uint64_t rng_seed, const TrackLayout& layout = {})
{
    if (layout.gate_count < 2) throw Error("randomize_world: need at least two gates");
    if (spec.jitter_max < 0.0) throw Error("randomize_world: negative jitter");
    Rng rng(rng_seed);
    const std::uint32_t base = texture_seed_base(spec.texture_family);

    const bool cw_draw = rng.coin();
    const double vmax_draw = rng.uniform(layout.v_max_lo, layout.v_max_hi);
    const double illum_draw = rng.uniform(layout.illumination_lo, layout.illumination_hi);
    const auto floor_draw = static_cast<std::uint32_t>(rng.below(kTextureSeedSpan));
    const auto wall_draw = static_cast<std::uint32_t>(rng.below(kTextureSeedSpan));

    World w;
    w.bounds = layout.bounds;
    w.direction = spec.direction && cw_draw ? Direction::cw : Direction::ccw;
    w.v_max = spec.v_max ? vmax_draw : layout.nominal_v_max;
    w.illumination = spec.illumination ? illum_draw : 1.0;
    w.floor_texture = base + (spec.background_texture ? floor_draw : 1u);
    w.wall_texture = base + (spec.background_texture ? wall_draw : 2u);

    const double sgn = w.direction == Direction::ccw ? 1.0 : -1.0;
    const int n = layout.gate_count;
    std::vector<Vec3> centers;
    for (int i = 0; i < n; ++i) {
        const Vec3 jitter = rng.in_unit_ball() * spec.jitter_max;
        const auto tex_draw = static_cast<std::uint32_t>(rng.below(kTextureSeedSpan));
        const auto shape_draw = static_cast<int>(rng.below(3));
        GateMotion motion;
        motion.amplitude = rng.uniform(0.0, layout.motion_amplitude_max);
        motion.period = rng.uniform(layout.motion_period_lo, layout.motion_period_hi);
        motion.phase = rng.uniform(0.0, 2 * kPi);
        const double axis_angle = rng.uniform(0.0, 2 * kPi);
        motion.axis = Vec3(std::cos(axis_angle), std::sin(axis_angle), 0.0);

        const double ang = sgn * 2 * kPi * i / n;
        Vec3 c(layout.radius * std::cos(ang), layout.radius * std::sin(ang), layout.height);
        if (spec.gate_position) {
            c += jitter;
            c.z() = std::clamp(c.z(), layout.min_gate_height, layout.max_gate_height);
        }
        centers.push_back(c);

        Gate g;
        g.width = layout.gate_width;
        g.height = layout.gate_height;
        g.frame_band = layout.frame_band;
        g.texture_seed = base + (spec.gate_texture ? tex_draw : 3u);
        g.shape = spec.gate_shape ? static_cast<GateShape>(shape_draw) : GateShape::square;
        if (layout.dynamic) g.motion = motion;
        w.gates.push_back(g);
    }
    // Each gate faces along the chord from its predecessor to its successor.
    for (int i = 0; i < n; ++i) {
        const Vec3 d = centers[static_cast<std::size_t>((i + 1) % n)] - centers[static_cast<std::size_t>((i + n - 1) % n)];
        const double yaw = std::atan2(d.y(), d.x());
        auto& g = w.gates[static_cast<std::size_t>(i)];
        g.nominal = centers[static_cast<std::size_t>(i)];
        g.pose = {g.nominal, from_euler_zyx(yaw, 0.0, 0.0)};
    }
    return w;
}

}  // namespace drnav
