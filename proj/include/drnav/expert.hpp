#pragma once

#include "drnav/dynamics.hpp"
#include "drnav/polytraj.hpp"
#include "drnav/world.hpp"

#include <algorithm>

namespace drnav {

struct ExpertConfig {
    double d_min = 1.0;   ///< m, prediction horizon bounds
    double d_max = 10.0;
    double l_min = 0.0;   ///< m, planning length bounds
    double l_max = 3.0;
    double m_l = 5.0;     ///< s, planning length per unit normalized speed
    double gate_distance_scale = 10.0;  ///< m, normalizer of the gate-distance label

    void validate() const
    {
        if (!(d_min >= 0.0 && d_min < d_max)) throw Error("expert config: need 0 <= d_min < d_max");
        if (!(l_min >= 0.0 && l_min < l_max)) throw Error("expert config: need 0 <= l_min < l_max");
        if (!(m_l > 0.0)) throw Error("expert config: m_l must be positive");
    }
};

/// Look-ahead distance along the global trajectory.
inline double prediction_horizon(double d_prev, double d_next, const ExpertConfig& cfg)
{
    return std::min(cfg.d_max, std::max(cfg.d_min, std::min(d_prev, d_next)));
}

/// Distance along the camera ray at which the goal is placed. Used both when
/// labelling (with the expert speed) and when flying (with the predicted speed).
inline double planning_length(double v, double l_min, double l_max, double m_l)
{
    return std::min(l_max, std::max(l_min, m_l * v));
}

inline double planning_length(double v, const ExpertConfig& cfg) { return planning_length(v, cfg.l_min, cfg.l_max, cfg.m_l); }

/// The global trajectory together with its sampled peak speed.
struct ExpertReference {
    PiecewiseTrajectory traj;
    double peak_speed = 0.0;

    explicit ExpertReference(PiecewiseTrajectory t) : traj(std::move(t)), peak_speed(max_speed(traj))
    {
        if (!(peak_speed > 0.0)) throw Error("expert: degenerate global trajectory (zero peak speed)");
    }
};

/// Supervision targets plus the derived goal quantities.
struct ExpertLabel {
    ImageCoords x_g;                 ///< navigation direction
    double v_g = 0.0;                ///< normalized speed
    ImageCoords s_g;                 ///< next gate center in the image
    Vec3 phi_g = Vec3::Zero();       ///< gate orientation relative to the drone (yaw, pitch, roll)
    double d_g = 0.0;                ///< normalized gate distance
    Vec3 p_g = Vec3::Zero();         ///< 3D goal point
    double v_des = 0.0;              ///< m/s
    double d_train = 0.0;
    double l_train = 0.0;
    Vec3 aim_point = Vec3::Zero();   ///< point on the global trajectory that defines x_g
    double t_closest = 0.0;
};

/// Gate-attribute labels for the given gate as seen from the drone.
inline void gate_labels(ExpertLabel& out, const DroneState& state, const Gate& gate, const CameraModel& cam,
                        const ExpertConfig& cfg)
{
    const Pose pose = state.pose();
    out.s_g = project(gate.pose.position, pose, cam).coords;
    out.phi_g = euler_zyx(state.orientation.conjugate() * gate.pose.orientation);
    out.d_g = std::min(1.0, (gate.pose.position - state.position).norm() / cfg.gate_distance_scale);
}

inline ExpertLabel expert_label(const DroneState& state, const ExpertReference& ref, const World& world, int next_gate,
                                const CameraModel& cam, const ExpertConfig& cfg, double v_max)
{
    const int n = static_cast<int>(world.gates.size());
    if (next_gate < 0 || next_gate >= n) throw Error("expert: bad gate index");
    const Pose pose = state.pose();
    const Vec3 next_c = world.gates[static_cast<std::size_t>(next_gate)].pose.position;
    const Vec3 prev_c = world.gates[static_cast<std::size_t>((next_gate + n - 1) % n)].pose.position;

    ExpertLabel out;
    out.d_train = prediction_horizon((prev_c - state.position).norm(), (next_c - state.position).norm(), cfg);
    const ClosestPoint cp = closest_point(ref.traj, state.position);
    out.t_closest = cp.t;
    out.aim_point = forward_point(ref.traj, cp.t, state.position, out.d_train).point;
    out.x_g = project(out.aim_point, pose, cam).coords;
    out.v_g = std::clamp(cp.sample.velocity.norm() / ref.peak_speed, 0.0, 1.0);
    out.l_train = planning_length(out.v_g, cfg);
    out.p_g = goal_from_ray(out.x_g, out.l_train, pose, cam);
    out.v_des = v_max * out.v_g;
    gate_labels(out, state, world.gates[static_cast<std::size_t>(next_gate)], cam, cfg);
    return out;
}

}  // namespace drnav
