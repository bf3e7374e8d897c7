#pragma once

// Frames: world is z-up. Body is x-forward, y-left, z-up. The camera frame
// shares the body axis convention (x is the optical axis). Normalized image
// coordinates put the optical axis at the origin, image-x to the right and
// image-y downward, and map the field-of-view edges to +-1 through the
// tangent ratio tan(angle)/tan(fov/2).

#include "drnav/core.hpp"

#include <algorithm>

namespace drnav {

struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();  ///< world <- body

    Vec3 to_world(const Vec3& p_body) const { return position + orientation * p_body; }
    Vec3 to_body(const Vec3& p_world) const { return orientation.conjugate() * (p_world - position); }
};

struct ImageCoords {
    double x = 0.0;
    double y = 0.0;
};

struct CameraModel {
    double horizontal_fov = kPi / 2.0;
    double aspect = 4.0 / 3.0;
    Pose mount;  ///< body -> camera rigid transform

    double tan_half_h() const { return std::tan(0.5 * horizontal_fov); }
    double tan_half_v() const { return tan_half_h() / aspect; }

    void validate() const
    {
        if (!(horizontal_fov > 0.0 && horizontal_fov < kPi)) throw Error("camera: horizontal_fov must be in (0, pi)");
        if (!(aspect > 0.0)) throw Error("camera: aspect must be positive");
    }
};

/// World pose of the camera for a given drone pose.
inline Pose camera_pose(const Pose& drone, const CameraModel& cam)
{
    return {drone.to_world(cam.mount.position), drone.orientation * cam.mount.orientation};
}

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Quat from_euler_zyx(double yaw, double pitch, double roll)
{
    return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                Eigen::AngleAxisd(roll, Vec3::UnitX()));
}

/// (yaw, pitch, roll) of a unit quaternion. At gimbal lock roll is pinned to 0.
inline Vec3 euler_zyx(const Quat& q)
{
    const Mat3 r = q.normalized().toRotationMatrix();
    const double sp = -r(2, 0);
    if (std::abs(sp) >= 1.0 - 1e-12) {
        const double pitch = std::copysign(kPi / 2.0, sp);
        const double yaw = std::atan2(-r(0, 1), r(1, 1));
        return {yaw, pitch, 0.0};
    }
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    const double pitch = std::atan2(sp, std::hypot(r(0, 0), r(1, 0)));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    return {yaw, pitch, roll};
}

struct Projection {
    ImageCoords coords;     ///< always within [-1,1]^2
    bool visible = false;   ///< in front of the camera and inside the frame
    bool in_front = false;
};

/// Pinhole projection of a world point.
///
/// Points inside the frustum map exactly. Points in front but outside the
/// frame are clamped componentwise to the border. Points at or behind the
/// camera plane are pushed onto the border along the sign of their lateral
/// offset; a point exactly behind the optical axis maps to (1, 0).
inline Projection project(const Vec3& point, const Pose& drone, const CameraModel& cam)
{
    const Pose cp = camera_pose(drone, cam);
    const Vec3 pc = cp.to_body(point);
    const double th = cam.tan_half_h(), tv = cam.tan_half_v();
    Projection out;
    if (pc.x() > 0.0) {
        const double u = -pc.y() / (pc.x() * th);
        const double v = -pc.z() / (pc.x() * tv);
        out.in_front = true;
        // tolerance absorbs tan() rounding exactly at the field-of-view edge
        out.visible = std::abs(u) <= 1.0 + 1e-12 && std::abs(v) <= 1.0 + 1e-12;
        out.coords = {std::clamp(u, -1.0, 1.0), std::clamp(v, -1.0, 1.0)};
        return out;
    }
    const double a = -pc.y() / th, b = -pc.z() / tv;
    const double m = std::max(std::abs(a), std::abs(b));
    out.coords = m > 0.0 ? ImageCoords{a / m, b / m} : ImageCoords{1.0, 0.0};
    return out;
}

/// Unit world-frame ray through the given image coordinates.
inline Vec3 backproject(const ImageCoords& c, const Pose& drone, const CameraModel& cam)
{
    const Vec3 ray_cam = Vec3(1.0, -c.x * cam.tan_half_h(), -c.y * cam.tan_half_v()).normalized();
    return (drone.orientation * cam.mount.orientation * ray_cam).normalized();
}

/// Point at `length` meters along the back-projected ray from the camera origin.
inline Vec3 goal_from_ray(const ImageCoords& c, double length, const Pose& drone, const CameraModel& cam)
{
    if (length < 0.0) throw Error("goal_from_ray: negative length");
    return camera_pose(drone, cam).position + length * backproject(c, drone, cam);
}

}  // namespace drnav
