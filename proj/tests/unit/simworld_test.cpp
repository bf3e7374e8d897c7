#include "drnav/dynamics.hpp"
#include "drnav/render.hpp"
#include "drnav/world.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace drnav;

namespace {

DroneState run(DroneState s, const ControlInput& u, double dt, double duration, const QuadrotorParams& prm = {})
{
    const int n = static_cast<int>(std::round(duration / dt));
    for (int i = 0; i < n; ++i) s = step_dynamics(s, u, dt, prm);
    return s;
}

double energy(const DroneState& s, const QuadrotorParams& prm)
{
    const Vec3 w = s.body_rates;
    return 0.5 * prm.mass * s.velocity.squaredNorm() + prm.mass * prm.gravity * s.position.z() +
           0.5 * w.dot(prm.inertia.cwiseProduct(w));
}

World single_gate_world(const Vec3& center = Vec3(0, 0, 1.5), double yaw = 0.0)
{
    World w;
    Gate g;
    g.nominal = center;
    g.pose = {center, from_euler_zyx(yaw, 0, 0)};
    w.gates.push_back(g);
    return w;
}

}  // namespace

TEST(Dynamics, HoverEquilibrium)
{
    const QuadrotorParams prm;
    DroneState s;
    s.position = Vec3(1, 2, 1.5);
    const auto end = run(s, {prm.mass * prm.gravity, Vec3::Zero()}, 1e-3, 1.0);
    EXPECT_LT((end.position - s.position).norm(), 1e-9);
    EXPECT_NEAR(end.t, 1.0, 1e-9);
}

TEST(Dynamics, FreeFall)
{
    const QuadrotorParams prm;
    DroneState s;
    s.position.z() = 10.0;
    const double dt = 0.005;
    for (int i = 0; i < 10; ++i) {
        const auto n = step_dynamics(s, {}, dt, prm);
        EXPECT_NEAR(n.velocity.z() - s.velocity.z(), -prm.gravity * dt, 1e-12);
        s = n;
    }
}

TEST(Dynamics, Rk4FourthOrder)
{
    const QuadrotorParams prm;
    DroneState s;
    s.position = Vec3(0, 0, 5);
    s.velocity = Vec3(1, -0.5, 0.2);
    s.body_rates = Vec3(0.8, -0.6, 1.1);
    s.orientation = from_euler_zyx(0.3, 0.1, -0.2);
    const ControlInput u{11.0, Vec3(0.002, -0.001, 0.0005)};
    const auto a = run(s, u, 0.01, 1.0), b = run(s, u, 0.005, 1.0), c = run(s, u, 0.0025, 1.0);
    const double e1 = (a.position - b.position).norm(), e2 = (b.position - c.position).norm();
    EXPECT_GE(std::log2(e1 / e2), 3.5);
}

TEST(Dynamics, EnergyConservedWithoutInputs)
{
    const QuadrotorParams prm;
    DroneState s;
    s.position = Vec3(0, 0, 20);
    s.velocity = Vec3(2, 1, 0);
    s.body_rates = Vec3(1.0, -2.0, 0.5);
    const double e0 = energy(s, prm);
    const auto e = run(s, {}, 1e-3, 1.0);
    EXPECT_LT(std::abs(energy(e, prm) - e0) / std::abs(e0), 1e-5);
    EXPECT_NEAR(e.orientation.norm(), 1.0, 1e-12);
}

TEST(Dynamics, RejectsBadInput)
{
    DroneState s;
    EXPECT_THROW(step_dynamics(s, {}, 0.0), Error);
    EXPECT_THROW(step_dynamics(s, {}, 0.02), Error);
    s.velocity.x() = std::nan("");
    EXPECT_THROW(step_dynamics(s, {}, 0.001), Error);
}

TEST(Dynamics, ActuatorSaturation)
{
    const QuadrotorParams prm;
    const auto u = saturate({1e6, Vec3(5, -5, 5)}, prm);
    EXPECT_EQ(u.thrust, prm.thrust_max);
    EXPECT_EQ(u.torques.x(), prm.torque_max.x());
    EXPECT_EQ(u.torques.y(), -prm.torque_max.y());
    EXPECT_EQ(saturate({-3, Vec3::Zero()}, prm).thrust, 0.0);
}

TEST(UpdateGates, StaticWorldUnchanged)
{
    const World w = randomize_world(RandomizationSpec{}, 4);
    const World u = update_gates(w, 3.7);
    for (std::size_t i = 0; i < w.gates.size(); ++i) EXPECT_EQ(w.gates[i].pose.position, u.gates[i].pose.position);
}

TEST(UpdateGates, MotionLaw)
{
    World w = single_gate_world();
    w.gates[0].motion = GateMotion{Vec3::UnitY(), 0.0, 5.0, 0.3};
    EXPECT_EQ(update_gates(w, 1.3).gates[0].pose.position, w.gates[0].pose.position);  // amplitude 0

    w.gates[0].motion = GateMotion{Vec3::UnitY(), 1.2, 5.0, 0.0};
    EXPECT_LT((update_gates(w, 5.0).gates[0].pose.position - w.gates[0].nominal).norm(), 1e-12);
    double peak = 0.0;
    for (double t = 0.0; t <= 5.0; t += 1e-3) {
        const World u = update_gates(w, t);
        peak = std::max(peak, (u.gates[0].pose.position - w.gates[0].nominal).norm());
        EXPECT_EQ(u.gates[0].pose.orientation.coeffs(), w.gates[0].pose.orientation.coeffs());
    }
    EXPECT_NEAR(peak, 1.2, 1e-3);
    EXPECT_THROW(update_gates(w, -1.0), Error);
}

TEST(GateEvent, PassThroughCenter)
{
    const World w = single_gate_world();
    const auto e = detect_gate_event({-0.1, 0, 1.5}, {0.1, 0, 1.5}, w, 0);
    EXPECT_EQ(e.kind, EventKind::passed);
    EXPECT_EQ(e.gate_index, 0);
}

TEST(GateEvent, ReverseCrossingIsNotAPass)
{
    const World w = single_gate_world();
    EXPECT_EQ(detect_gate_event({0.1, 0, 1.5}, {-0.1, 0, 1.5}, w, 0).kind, EventKind::none);
}

TEST(GateEvent, FrameHit)
{
    const World w = single_gate_world();
    // 5 cm outside the aperture edge, inside the 0.3 m band
    const auto e = detect_gate_event({-0.1, 0.75, 1.5}, {0.1, 0.75, 1.5}, w, 0);
    EXPECT_EQ(e.kind, EventKind::crashed);
    EXPECT_EQ(e.cause, CrashCause::frame);
    EXPECT_EQ(detect_gate_event({-0.1, 1.5, 1.5}, {0.1, 1.5, 1.5}, w, 0).kind, EventKind::none);  // beside the gate
}

TEST(GateEvent, ParallelSegmentIsNone)
{
    const World w = single_gate_world();
    EXPECT_EQ(detect_gate_event({-0.5, -0.3, 1.5}, {-0.5, 0.3, 1.5}, w, 0).kind, EventKind::none);
}

TEST(GateEvent, FloorAndBounds)
{
    const World w = single_gate_world();
    EXPECT_EQ(detect_gate_event({3, 3, 0.1}, {3, 3, -0.01}, w, 0).cause, CrashCause::floor);
    EXPECT_EQ(detect_gate_event({13.9, 0, 2}, {14.1, 0, 2}, w, 0).cause, CrashCause::bounds);
    EXPECT_THROW(detect_gate_event({0, 0, 1}, {0, 0, 1}, w, 1), Error);
}

TEST(GateEvent, OtherGateFrameCrashes)
{
    World w = single_gate_world();
    Gate g2 = w.gates[0];
    g2.nominal = g2.pose.position = Vec3(5, 0, 1.5);
    w.gates.push_back(g2);
    EXPECT_EQ(detect_gate_event({4.9, 0.8, 1.5}, {5.1, 0.8, 1.5}, w, 0).kind, EventKind::crashed);
    EXPECT_EQ(detect_gate_event({4.9, 0.0, 1.5}, {5.1, 0.0, 1.5}, w, 0).kind, EventKind::none);
}

TEST(GateEvent, ShapesAreConvexOutlines)
{
    for (auto shape : {GateShape::square, GateShape::circle, GateShape::hex}) {
        Gate g;
        g.shape = shape;
        EXPECT_EQ(gate_zone(g, {0, 0}), GateZone::aperture);
        EXPECT_EQ(gate_zone(g, {0, 0.65}), GateZone::aperture);
        EXPECT_EQ(gate_zone(g, {0, 0.8}), GateZone::frame);
        EXPECT_EQ(gate_zone(g, {0, 1.2}), GateZone::outside);
    }
}

TEST(GateEvent, SevenPassesMakeOneLoop)
{
    const World w = randomize_world(RandomizationSpec::none(), 1);
    int next = 0, passed = 0;
    for (int k = 0; k < 7; ++k) {
        const Gate& g = w.gates[static_cast<std::size_t>(next)];
        const auto e = detect_gate_event(g.pose.to_world({-0.2, 0, 0}), g.pose.to_world({0.2, 0, 0}), w, next);
        ASSERT_EQ(e.kind, EventKind::passed);
        next = (next + 1) % 7;
        ++passed;
    }
    EXPECT_EQ(next, 0);
    EXPECT_EQ(passed / 7, 1);
}

TEST(RandomizeWorld, DisabledIsNominal)
{
    const auto spec = RandomizationSpec::none();
    const World a = randomize_world(spec, 1), b = randomize_world(spec, 999);
    ASSERT_EQ(a.gates.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(a.gates[i].pose.position, b.gates[i].pose.position);
        EXPECT_EQ(a.gates[i].texture_seed, b.gates[i].texture_seed);
        EXPECT_NEAR(a.gates[i].pose.position.head<2>().norm(), 8.0, 1e-12);
        EXPECT_NEAR(a.gates[i].pose.position.z(), 1.5, 1e-12);
    }
    EXPECT_EQ(a.v_max, 6.0);
    EXPECT_EQ(a.illumination, 1.0);
    EXPECT_EQ(a.direction, Direction::ccw);
    EXPECT_EQ(a.floor_texture, b.floor_texture);
}

TEST(RandomizeWorld, SameSeedSameWorld)
{
    RandomizationSpec spec;
    spec.jitter_max = 2.0;
    const World a = randomize_world(spec, 42), b = randomize_world(spec, 42);
    EXPECT_EQ(a.v_max, b.v_max);
    EXPECT_EQ(a.direction, b.direction);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(a.gates[i].pose.position, b.gates[i].pose.position);
        EXPECT_EQ(a.gates[i].shape, b.gates[i].shape);
    }
}

TEST(RandomizeWorld, VmaxDistribution)
{
    RandomizationSpec spec;
    double sum = 0.0, lo = 1e9, hi = -1e9;
    for (int i = 0; i < 10000; ++i) {
        const double v = randomize_world(spec, static_cast<std::uint64_t>(i)).v_max;
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    EXPECT_GE(lo, 4.0);
    EXPECT_LE(hi, 8.0);
    EXPECT_NEAR(sum / 10000, 6.0, 0.05);
}

TEST(RandomizeWorld, JitterBoundAndGateFacing)
{
    RandomizationSpec spec;
    spec.jitter_max = 2.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const World w = randomize_world(spec, seed);
        for (std::size_t i = 0; i < w.gates.size(); ++i) {
            const Gate& g = w.gates[i];
            EXPECT_TRUE(w.bounds.contains(g.pose.position));
            const Vec3 next = w.gates[(i + 1) % 7].pose.position, prev = w.gates[(i + 6) % 7].pose.position;
            EXPECT_GT(g.normal().dot(next - prev), 0.0);
        }
    }
}

TEST(RandomizeWorld, DisablingOneFactorKeepsOthers)
{
    RandomizationSpec all;
    RandomizationSpec no_illum = all;
    no_illum.illumination = false;
    const World a = randomize_world(all, 17), b = randomize_world(no_illum, 17);
    EXPECT_EQ(a.v_max, b.v_max);
    EXPECT_EQ(a.floor_texture, b.floor_texture);
    EXPECT_EQ(b.illumination, 1.0);
}

TEST(RandomizeWorld, TextureFamiliesDisjoint)
{
    RandomizationSpec train, test;
    test.texture_family = TextureFamily::test;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const World a = randomize_world(train, s), b = randomize_world(test, s);
        EXPECT_EQ(texture_family_of(a.floor_texture), TextureFamily::train);
        EXPECT_EQ(texture_family_of(b.floor_texture), TextureFamily::test);
        for (const auto& g : b.gates) EXPECT_EQ(texture_family_of(g.texture_seed), TextureFamily::test);
    }
}

TEST(Texture, FamiliesUseDisjointKinds)
{
    std::set<int> train, test;
    for (std::uint32_t s = 0; s < 200; ++s) {
        train.insert(static_cast<int>(ProceduralTexture(s).kind()));
        test.insert(static_cast<int>(ProceduralTexture(kTextureSeedSpan + s).kind()));
    }
    EXPECT_EQ(train, (std::set<int>{0, 1, 2}));
    EXPECT_EQ(test, (std::set<int>{3, 4, 5}));
}

TEST(Render, Deterministic)
{
    RandomizationSpec spec;
    spec.jitter_max = 2.0;
    const World w = randomize_world(spec, 5);
    const Pose drone{Vec3(0, -8, 1.5), from_euler_zyx(0.2, 0.05, 0.0)};
    const CameraModel cam;
    EXPECT_EQ(render(w, drone, cam, 64, 48), render(w, drone, cam, 64, 48));
    EXPECT_THROW(render(w, drone, cam, 8, 48), Error);
}

TEST(Render, IlluminationScalesLinearly)
{
    World w = randomize_world(RandomizationSpec{}, 6);
    const Pose drone{Vec3(2, -6, 1.5), from_euler_zyx(1.0, 0.0, 0.0)};
    const CameraModel cam;
    w.illumination = 1.0;
    const Image full = render(w, drone, cam, 64, 48);
    w.illumination = 0.5;
    const Image half = render(w, drone, cam, 64, 48);
    for (std::size_t i = 0; i < full.rgb.size(); ++i) EXPECT_LE(std::abs(2.0 * half.rgb[i] - full.rgb[i]), 1.0 + 1e-9);
}

TEST(Render, GateAheadAppearsWhereItsFrameProjects)
{
    const World w = single_gate_world(Vec3(3, 0, 1.5), 0.0);
    const Pose drone{Vec3(0, 0, 1.5), Quat::Identity()};
    const CameraModel cam;
    const int W = 64, H = 48;
    const auto out = render_with_ids(w, drone, cam, W, H);
    // Oracle: the midpoint of every frame segment, projected, must land on a gate pixel.
    const Gate& g = w.gates[0];
    const auto inner = gate_outline(g), outer = gate_outline(g, g.frame_band);
    int hits = 0;
    for (std::size_t k = 0; k < inner.size(); ++k) {
        const Eigen::Vector2d mid = 0.25 * (inner[k] + inner[(k + 1) % 4] + outer[k] + outer[(k + 1) % 4]);
        const auto pr = project(g.pose.to_world(Vec3(0, mid.x(), mid.y())), drone, cam);
        ASSERT_TRUE(pr.visible);
        const int px = static_cast<int>((pr.coords.x + 1) * 0.5 * W), py = static_cast<int>((pr.coords.y + 1) * 0.5 * H);
        EXPECT_EQ(out.surface[static_cast<std::size_t>(py * W + px)], kFirstGate);
        ++hits;
    }
    EXPECT_EQ(hits, 4);
    // looking through the aperture center we see the far wall, not the gate
    EXPECT_EQ(out.surface[static_cast<std::size_t>(H / 2 * W + W / 2)], kWall);
    // the whole frame sits in the central region of the image
    int xmin = W, xmax = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (out.surface[static_cast<std::size_t>(y * W + x)] == kFirstGate) {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
            }
    EXPECT_GT(xmin, W / 8);
    EXPECT_LT(xmax, W - W / 8);
}

TEST(Render, FloorBelowHorizon)
{
    const World w = randomize_world(RandomizationSpec::none(), 0);
    const auto out = render_with_ids(w, Pose{Vec3(0, 0, 1.5), Quat::Identity()}, CameraModel{}, 64, 48);
    EXPECT_EQ(out.surface[static_cast<std::size_t>(47 * 64 + 32)], kFloor);
}
