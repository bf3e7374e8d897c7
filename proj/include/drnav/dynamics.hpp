#pragma once

#include "drnav/geometry.hpp"

#include <algorithm>

namespace drnav {

struct DroneState {
    Vec3 position = Vec3::Zero();     ///< m, world
    Vec3 velocity = Vec3::Zero();     ///< m/s, world
    Quat orientation = Quat::Identity();
    Vec3 body_rates = Vec3::Zero();   ///< rad/s, body
    double t = 0.0;

    Pose pose() const { return {position, orientation}; }
    bool finite() const
    {
        return position.allFinite() && velocity.allFinite() && orientation.coeffs().allFinite() &&
               body_rates.allFinite() && std::isfinite(t);
    }
};

struct ControlInput {
    double thrust = 0.0;             ///< N, along body z
    Vec3 torques = Vec3::Zero();     ///< N m, body
};

struct QuadrotorParams {
    double mass = 1.0;
    Vec3 inertia = Vec3(0.007, 0.007, 0.012);  ///< principal moments, kg m^2
    double drag = 0.0;                         ///< linear drag coefficient, 1/s
    double gravity = kGravity;
    double thrust_max = 30.0;
    Vec3 torque_max = Vec3(1.0, 1.0, 0.3);

    Vec3 gravity_vector() const { return {0.0, 0.0, -gravity}; }
};

inline ControlInput saturate(const ControlInput& u, const QuadrotorParams& params)
{
    ControlInput out;
    out.thrust = std::clamp(u.thrust, 0.0, params.thrust_max);
    out.torques = u.torques.cwiseMax(-params.torque_max).cwiseMin(params.torque_max);
    return out;
}

namespace detail {

struct StateDerivative {
    Vec3 dp, dv;
    Eigen::Vector4d dq;  // (x, y, z, w) coefficient order
    Vec3 dw;
};

inline StateDerivative rigid_body_rates(const Vec3& v, const Eigen::Vector4d& qc, const Vec3& w, const ControlInput& u,
                                        const QuadrotorParams& prm)
{
    const Quat q(qc(3), qc(0), qc(1), qc(2));
    StateDerivative d;
    d.dp = v;
    d.dv = prm.gravity_vector() + (q.normalized() * Vec3::UnitZ()) * (u.thrust / prm.mass) - prm.drag * v;
    const Quat dq = q * Quat(0.0, w.x(), w.y(), w.z());
    d.dq = 0.5 * dq.coeffs();
    const Vec3 jw = prm.inertia.cwiseProduct(w);
    d.dw = (u.torques - w.cross(jw)).cwiseQuotient(prm.inertia);
    return d;
}

}  // namespace detail

/// One RK4 step of the 6-DOF rigid-body model. The control is held constant
/// (after saturation) over the step and the quaternion is renormalized.
inline DroneState step_dynamics(const DroneState& s, const ControlInput& u_in, double dt,
                                const QuadrotorParams& params = {})
{
    if (!(dt > 0.0 && dt <= 0.01)) throw Error("step_dynamics: dt must be in (0, 0.01]");
    if (!s.finite() || !std::isfinite(u_in.thrust) || !u_in.torques.allFinite())
        throw Error("step_dynamics: non-finite input");
    const ControlInput u = saturate(u_in, params);

    const Vec3 p0 = s.position, v0 = s.velocity, w0 = s.body_rates;
    const Eigen::Vector4d q0 = s.orientation.normalized().coeffs();

    const auto k1 = detail::rigid_body_rates(v0, q0, w0, u, params);
    const auto k2 = detail::rigid_body_rates(v0 + 0.5 * dt * k1.dv, q0 + 0.5 * dt * k1.dq, w0 + 0.5 * dt * k1.dw, u, params);
    const auto k3 = detail::rigid_body_rates(v0 + 0.5 * dt * k2.dv, q0 + 0.5 * dt * k2.dq, w0 + 0.5 * dt * k2.dw, u, params);
    const auto k4 = detail::rigid_body_rates(v0 + dt * k3.dv, q0 + dt * k3.dq, w0 + dt * k3.dw, u, params);

    DroneState out;
    out.position = p0 + dt / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    out.velocity = v0 + dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    const Eigen::Vector4d q = q0 + dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    out.orientation = Quat(q(3), q(0), q(1), q(2)).normalized();
    out.body_rates = w0 + dt / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
    out.t = s.t + dt;
    return out;
}

}  // namespace drnav
