#pragma once

#include "drnav/harness.hpp"

#include "json.hpp"

#include <fstream>

namespace drnav {

/// Every tunable of the pipeline in one place.
struct AppConfig {
    Settings settings;
    ScheduleConfig schedule;
    EvalConfig eval;
    std::vector<std::string> ablation_factors = default_ablation_factors();
};

namespace detail {

using nlohmann::json;

template <typename T>
void get_to(const json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline void get_vec3(const json& j, const char* key, Vec3& out)
{
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw Error(std::string("config: '") + key + "' must be a 3-vector");
    out = Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

inline const json& section(const json& j, const char* key)
{
    static const json empty = json::object();
    return j.contains(key) ? j.at(key) : empty;
}

}  // namespace detail

inline nlohmann::json config_to_json(const AppConfig& c)
{
    using nlohmann::json;
    using detail::vec3_json;
    const auto& e = c.settings.expert;
    const auto& p = c.settings.pilot;
    const auto& g = p.gains;
    const auto& q = c.settings.quad;
    const auto& s = c.schedule;
    const auto& d = s.collect;
    const auto& r = d.rand_spec;
    const auto& l = d.layout;
    const auto& t = s.train;
    const auto& n = t.net;
    json j;
    j["expert"] = {{"d_min", e.d_min}, {"d_max", e.d_max}, {"l_min", e.l_min}, {"l_max", e.l_max}, {"m_l", e.m_l},
                   {"gate_distance_scale", e.gate_distance_scale}};
    j["pilot"] = {{"l_min", p.l_min},
                  {"l_max", p.l_max},
                  {"m_l", p.m_l},
                  {"replan_period", p.replan_period},
                  {"mode", p.mode == NavMode::nav_direction ? "nav_direction" : "gate_center"},
                  {"image_width", p.image_width},
                  {"image_height", p.image_height},
                  {"gains",
                   {{"kp", g.kp}, {"kv", g.kv}, {"kr", g.kr}, {"kw", g.kw}, {"drag_feedforward", g.drag_feedforward},
                    {"max_tilt", g.max_tilt}}}};
    j["camera"] = {{"horizontal_fov_deg", c.settings.camera.horizontal_fov * 180.0 / kPi}, {"aspect", c.settings.camera.aspect}};
    j["quadrotor"] = {{"mass", q.mass},           {"inertia", vec3_json(q.inertia)}, {"drag", q.drag},
                      {"thrust_max", q.thrust_max}, {"torque_max", vec3_json(q.torque_max)}};
    j["dt"] = c.settings.dt;
    j["dagger"] = {{"trials", d.trials},
                   {"trial_duration", d.trial_duration},
                   {"sample_rate", d.sample_rate},
                   {"seed", d.seed},
                   {"epsilons", s.epsilons},
                   {"fine_tune", s.fine_tune},
                   {"test_trials", s.test_trials},
                   {"test_seed", s.test_seed},
                   {"out_dir", s.out_dir}};
    json rj;
    for (const auto& name : randomization_factor_names()) {
        RandomizationSpec copy = r;
        rj[name] = randomization_flag(copy, name);
    }
    rj["jitter_max"] = r.jitter_max;
    j["randomization"] = rj;
    j["layout"] = {{"gate_count", l.gate_count},
                   {"radius", l.radius},
                   {"height", l.height},
                   {"gate_width", l.gate_width},
                   {"gate_height", l.gate_height},
                   {"frame_band", l.frame_band},
                   {"min_gate_height", l.min_gate_height},
                   {"max_gate_height", l.max_gate_height},
                   {"nominal_v_max", l.nominal_v_max},
                   {"v_max_range", {l.v_max_lo, l.v_max_hi}},
                   {"illumination_range", {l.illumination_lo, l.illumination_hi}}};
    j["network"] = {{"arch", to_string(n.arch)},
                    {"width", n.width},
                    {"height", n.height},
                    {"dense", n.dense},
                    {"hidden1", n.hidden1},
                    {"hidden2", n.hidden2}};
    j["training"] = {{"epochs", t.epochs},
                     {"batch", t.batch},
                     {"lr", t.lr},
                     {"momentum", t.momentum},
                     {"seed", t.seed},
                     {"loss_weights", {t.weights.g1, t.weights.g2, t.weights.g3, t.weights.g4}}};
    j["eval"] = {{"v_max", c.eval.v_max},
                 {"trials", c.eval.trials},
                 {"seed", c.eval.seed},
                 {"duration", c.eval.duration},
                 {"loops", c.eval.loops}};
    j["ablation"] = {{"factors", c.ablation_factors}};
    return j;
}

/// Reads a config; keys that are absent keep their defaults.
inline AppConfig config_from_json(const nlohmann::json& j)
{
    using namespace detail;
    AppConfig c;
    auto& e = c.settings.expert;
    const auto& je = section(j, "expert");
    get_to(je, "d_min", e.d_min);
    get_to(je, "d_max", e.d_max);
    get_to(je, "l_min", e.l_min);
    get_to(je, "l_max", e.l_max);
    get_to(je, "m_l", e.m_l);
    get_to(je, "gate_distance_scale", e.gate_distance_scale);
    e.validate();

    auto& p = c.settings.pilot;
    const auto& jp = section(j, "pilot");
    get_to(jp, "l_min", p.l_min);
    get_to(jp, "l_max", p.l_max);
    get_to(jp, "m_l", p.m_l);
    get_to(jp, "replan_period", p.replan_period);
    get_to(jp, "image_width", p.image_width);
    get_to(jp, "image_height", p.image_height);
    if (jp.contains("mode")) {
        const auto m = jp.at("mode").get<std::string>();
        if (m != "nav_direction" && m != "gate_center") throw Error("config: unknown pilot mode " + m);
        p.mode = m == "gate_center" ? NavMode::gate_center : NavMode::nav_direction;
    }
    const auto& jg = section(jp, "gains");
    get_to(jg, "kp", p.gains.kp);
    get_to(jg, "kv", p.gains.kv);
    get_to(jg, "kr", p.gains.kr);
    get_to(jg, "kw", p.gains.kw);
    get_to(jg, "drag_feedforward", p.gains.drag_feedforward);
    get_to(jg, "max_tilt", p.gains.max_tilt);
    p.validate();

    const auto& jc = section(j, "camera");
    if (jc.contains("horizontal_fov_deg")) c.settings.camera.horizontal_fov = jc.at("horizontal_fov_deg").get<double>() * kPi / 180.0;
    get_to(jc, "aspect", c.settings.camera.aspect);
    c.settings.camera.validate();

    auto& q = c.settings.quad;
    const auto& jq = section(j, "quadrotor");
    get_to(jq, "mass", q.mass);
    get_vec3(jq, "inertia", q.inertia);
    get_to(jq, "drag", q.drag);
    get_to(jq, "thrust_max", q.thrust_max);
    get_vec3(jq, "torque_max", q.torque_max);
    get_to(j, "dt", c.settings.dt);
    if (!(c.settings.dt > 0.0 && c.settings.dt <= 0.01)) throw Error("config: dt must be in (0, 0.01]");

    auto& s = c.schedule;
    auto& d = s.collect;
    const auto& jd = section(j, "dagger");
    get_to(jd, "trials", d.trials);
    get_to(jd, "trial_duration", d.trial_duration);
    get_to(jd, "sample_rate", d.sample_rate);
    get_to(jd, "seed", d.seed);
    get_to(jd, "epsilons", s.epsilons);
    get_to(jd, "fine_tune", s.fine_tune);
    get_to(jd, "test_trials", s.test_trials);
    get_to(jd, "test_seed", s.test_seed);
    get_to(jd, "out_dir", s.out_dir);
    d.validate();

    const auto& jr = section(j, "randomization");
    for (const auto& name : randomization_factor_names()) get_to(jr, name.c_str(), randomization_flag(d.rand_spec, name));
    get_to(jr, "jitter_max", d.rand_spec.jitter_max);

    auto& l = d.layout;
    const auto& jl = section(j, "layout");
    get_to(jl, "gate_count", l.gate_count);
    get_to(jl, "radius", l.radius);
    get_to(jl, "height", l.height);
    get_to(jl, "gate_width", l.gate_width);
    get_to(jl, "gate_height", l.gate_height);
    get_to(jl, "frame_band", l.frame_band);
    get_to(jl, "min_gate_height", l.min_gate_height);
    get_to(jl, "max_gate_height", l.max_gate_height);
    get_to(jl, "nominal_v_max", l.nominal_v_max);
    if (jl.contains("v_max_range")) {
        const auto r = jl.at("v_max_range").get<std::array<double, 2>>();
        l.v_max_lo = r[0];
        l.v_max_hi = r[1];
    }
    if (jl.contains("illumination_range")) {
        const auto r = jl.at("illumination_range").get<std::array<double, 2>>();
        l.illumination_lo = r[0];
        l.illumination_hi = r[1];
    }

    auto& t = s.train;
    auto& n = t.net;
    const auto& jn = section(j, "network");
    if (jn.contains("arch")) n.arch = parse_arch(jn.at("arch").get<std::string>());
    get_to(jn, "width", n.width);
    get_to(jn, "height", n.height);
    get_to(jn, "dense", n.dense);
    get_to(jn, "hidden1", n.hidden1);
    get_to(jn, "hidden2", n.hidden2);
    if (n.width != p.image_width || n.height != p.image_height)
        throw Error("config: network input size must match the pilot image size");

    const auto& jt = section(j, "training");
    get_to(jt, "epochs", t.epochs);
    get_to(jt, "batch", t.batch);
    get_to(jt, "lr", t.lr);
    get_to(jt, "momentum", t.momentum);
    get_to(jt, "seed", t.seed);
    if (jt.contains("loss_weights")) {
        const auto w = jt.at("loss_weights").get<std::array<double, 4>>();
        t.weights = {w[0], w[1], w[2], w[3]};
    }
    t.validate();

    const auto& jv = section(j, "eval");
    get_to(jv, "v_max", c.eval.v_max);
    get_to(jv, "trials", c.eval.trials);
    get_to(jv, "seed", c.eval.seed);
    get_to(jv, "duration", c.eval.duration);
    get_to(jv, "loops", c.eval.loops);

    get_to(section(j, "ablation"), "factors", c.ablation_factors);
    for (const auto& f : c.ablation_factors) check_ablation_factor(f);
    return c;
}

inline AppConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error("config " + path + ": " + e.what());
    }
}

}  // namespace drnav
