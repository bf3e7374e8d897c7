#include "drnav/geometry.hpp"

#include <gtest/gtest.h>

using namespace drnav;

namespace {

double angle_between(const Vec3& a, const Vec3& b)
{
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace

TEST(EulerZyx, IdentityIsZero)
{
    const Vec3 e = euler_zyx(Quat::Identity());
    EXPECT_DOUBLE_EQ(e.x(), 0.0);
    EXPECT_DOUBLE_EQ(e.y(), 0.0);
    EXPECT_DOUBLE_EQ(e.z(), 0.0);
}

TEST(EulerZyx, PureYaw)
{
    const Quat q(Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()));
    const Vec3 e = euler_zyx(q);
    EXPECT_NEAR(e.x(), kPi / 2, 1e-12);
    EXPECT_NEAR(e.y(), 0.0, 1e-12);
    EXPECT_NEAR(e.z(), 0.0, 1e-12);
    EXPECT_LT((q * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-12);
}

TEST(EulerZyx, RoundTripRandomRotations)
{
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const Quat q = rng.rotation();
        const Vec3 e = euler_zyx(q);
        EXPECT_GT(e.x(), -kPi);
        EXPECT_LE(e.x(), kPi);
        EXPECT_LE(std::abs(e.y()), kPi / 2);
        const Quat back = from_euler_zyx(e.x(), e.y(), e.z());
        EXPECT_LT((back.toRotationMatrix() - q.toRotationMatrix()).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(EulerZyx, GimbalLockPinsRoll)
{
    const Quat q = from_euler_zyx(0.3, kPi / 2, 0.7);
    const Vec3 e = euler_zyx(q);
    EXPECT_NEAR(e.y(), kPi / 2, 1e-6);
    EXPECT_EQ(e.z(), 0.0);
    EXPECT_LT((from_euler_zyx(e.x(), e.y(), e.z()).toRotationMatrix() - q.toRotationMatrix()).norm(), 1e-6);
}

TEST(Project, OpticalAxisIsCenter)
{
    const CameraModel cam;
    const auto pr = project({5, 0, 0}, Pose{}, cam);
    EXPECT_TRUE(pr.visible);
    EXPECT_DOUBLE_EQ(pr.coords.x, 0.0);
    EXPECT_DOUBLE_EQ(pr.coords.y, 0.0);
}

TEST(Project, FortyFiveDegreesHitsEdge)
{
    const CameraModel cam;  // 90 deg hfov
    const auto right = project({5, -5, 0}, Pose{}, cam);
    EXPECT_NEAR(right.coords.x, 1.0, 1e-12);
    EXPECT_TRUE(right.visible);
    const auto up = project({5, 0, 1}, Pose{}, cam);
    EXPECT_LT(up.coords.y, 0.0);  // image y points down
}

TEST(Project, BehindCameraInvisible)
{
    const CameraModel cam;
    const auto pr = project({-1, 0, 0}, Pose{}, cam);
    EXPECT_FALSE(pr.visible);
    EXPECT_FALSE(pr.in_front);
    const auto side = project({-1, -0.2, 0}, Pose{}, cam);
    EXPECT_DOUBLE_EQ(side.coords.x, 1.0);
    EXPECT_DOUBLE_EQ(side.coords.y, 0.0);
}

TEST(Project, OutsideFrustumClamped)
{
    const CameraModel cam;
    const auto pr = project({1, 5, 0.2}, Pose{}, cam);
    EXPECT_TRUE(pr.in_front);
    EXPECT_FALSE(pr.visible);
    EXPECT_DOUBLE_EQ(pr.coords.x, -1.0);
    EXPECT_LE(std::abs(pr.coords.y), 1.0);
}

TEST(Backproject, CenterIsForwardAxis)
{
    const CameraModel cam;
    const Vec3 r = backproject({0, 0}, Pose{}, cam);
    EXPECT_LT((r - Vec3::UnitX()).norm(), 1e-15);
}

TEST(Backproject, EdgeIsFortyFiveDegrees)
{
    const CameraModel cam;
    const Vec3 r = backproject({1, 0}, Pose{}, cam);
    EXPECT_NEAR(std::atan2(-r.y(), r.x()), kPi / 4, 1e-12);
}

TEST(Backproject, RoundTripRandomVisiblePoints)
{
    Rng rng(11);
    CameraModel cam;
    int checked = 0;
    while (checked < 1000) {
        Pose drone{Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 3)), rng.rotation()};
        const Vec3 p = drone.position + 10.0 * rng.in_unit_ball();
        const auto pr = project(p, drone, cam);
        if (!pr.visible) continue;
        ++checked;
        const Vec3 ray = backproject(pr.coords, drone, cam);
        EXPECT_NEAR(ray.norm(), 1.0, 1e-12);
        EXPECT_LT(angle_between(ray, p - camera_pose(drone, cam).position), 1e-9);
    }
}

TEST(GoalFromRay, Examples)
{
    const CameraModel cam;
    const Vec3 g = goal_from_ray({0, 0}, 2.5, Pose{}, cam);
    EXPECT_LT((g - Vec3(2.5, 0, 0)).norm(), 1e-15);
    const Pose drone{Vec3(1, 2, 3), from_euler_zyx(0.4, 0.1, -0.2)};
    EXPECT_LT((goal_from_ray({0.3, 0.3}, 0.0, drone, cam) - drone.position).norm(), 1e-15);
    const Vec3 h = goal_from_ray({0.4, -0.2}, 3.0, drone, cam);
    EXPECT_NEAR((h - drone.position).norm(), 3.0, 1e-9);
    EXPECT_THROW(goal_from_ray({0, 0}, -1.0, drone, cam), Error);
}

TEST(CameraModel, Validation)
{
    CameraModel cam;
    EXPECT_NO_THROW(cam.validate());
    cam.horizontal_fov = kPi;
    EXPECT_THROW(cam.validate(), Error);
    cam.horizontal_fov = 1.0;
    cam.aspect = 0.0;
    EXPECT_THROW(cam.validate(), Error);
}
