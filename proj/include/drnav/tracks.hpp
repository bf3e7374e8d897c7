#pragma once

#include "drnav/world.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>

namespace drnav {

inline const char* to_string(GateShape s)
{
    switch (s) {
    case GateShape::square: return "square";
    case GateShape::circle: return "circle";
    case GateShape::hex: return "hex";
    }
    return "?";
}

inline GateShape parse_shape(const std::string& s)
{
    if (s == "square") return GateShape::square;
    if (s == "circle") return GateShape::circle;
    if (s == "hex") return GateShape::hex;
    throw Error("unknown gate shape: " + s);
}

/// Evaluation tracks. `easy` is the nominal 7-gate circle; `difficult` moves
/// gates up to 1.5 m off the circle and mixes shapes; `dynamic` is the easy
/// layout with gates oscillating horizontally.
inline World builtin_track(const std::string& name)
{
    TrackLayout layout;
    RandomizationSpec spec = RandomizationSpec::none();
    std::uint64_t seed = 0;
    if (name == "easy") {
    } else if (name == "difficult") {
        spec.gate_position = true;
        spec.gate_shape = true;
        spec.jitter_max = 1.5;
        seed = 2;
    } else if (name == "dynamic") {
        layout.dynamic = true;
        layout.motion_amplitude_max = 1.0;
        seed = 3;
    } else {
        throw Error("unknown track: " + name);
    }
    return randomize_world(spec, seed, layout);
}

inline nlohmann::json track_to_json(const World& w)
{
    using nlohmann::json;
    auto v3 = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
    json j;
    j["direction"] = w.direction == Direction::ccw ? "ccw" : "cw";
    j["bounds"] = {{"min", v3(w.bounds.min)}, {"max", v3(w.bounds.max)}};
    j["gates"] = json::array();
    for (const auto& g : w.gates) {
        json jg;
        jg["center"] = v3(g.nominal);
        jg["yaw_deg"] = euler_zyx(g.pose.orientation).x() * 180.0 / kPi;
        jg["shape"] = to_string(g.shape);
        jg["width"] = g.width;
        jg["height"] = g.height;
        jg["frame_band"] = g.frame_band;
        if (g.motion)
            jg["motion"] = {{"axis", v3(g.motion->axis)},
                            {"amplitude", g.motion->amplitude},
                            {"period", g.motion->period},
                            {"phase", g.motion->phase}};
        j["gates"].push_back(jg);
    }
    return j;
}

inline World track_from_json(const nlohmann::json& j)
{
    auto v3 = [](const nlohmann::json& a) {
        if (!a.is_array() || a.size() != 3) throw Error("track: expected a 3-vector");
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    World w;
    w.direction = j.value("direction", std::string("ccw")) == "cw" ? Direction::cw : Direction::ccw;
    if (j.contains("bounds")) {
        w.bounds.min = v3(j["bounds"].at("min"));
        w.bounds.max = v3(j["bounds"].at("max"));
    }
    for (const auto& jg : j.at("gates")) {
        Gate g;
        g.nominal = v3(jg.at("center"));
        g.pose = {g.nominal, from_euler_zyx(jg.at("yaw_deg").get<double>() * kPi / 180.0, 0.0, 0.0)};
        g.shape = parse_shape(jg.value("shape", std::string("square")));
        g.width = jg.value("width", g.width);
        g.height = jg.value("height", g.height);
        g.frame_band = jg.value("frame_band", g.frame_band);
        if (jg.contains("motion")) {
            const auto& m = jg["motion"];
            GateMotion gm;
            gm.axis = v3(m.at("axis"));
            gm.amplitude = m.value("amplitude", 0.0);
            gm.period = m.value("period", gm.period);
            gm.phase = m.value("phase", 0.0);
            if (!(gm.period > 0.0)) throw Error("track: motion period must be positive");
            g.motion = gm;
        }
        w.gates.push_back(g);
    }
    if (w.gates.size() < 2) throw Error("track: need at least two gates");
    return w;
}

/// A built-in track name or a path to a track JSON file.
inline World load_track(const std::string& name_or_path)
{
    if (!std::filesystem::exists(name_or_path)) return builtin_track(name_or_path);
    std::ifstream in(name_or_path);
    try {
        return track_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error("track " + name_or_path + ": " + e.what());
    }
}

}  // namespace drnav
