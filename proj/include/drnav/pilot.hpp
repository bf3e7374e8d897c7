#pragma once

#include "drnav/expert.hpp"
#include "drnav/network.hpp"
#include "drnav/render.hpp"
#include "drnav/sample.hpp"

#include <deque>
#include <memory>
#include <optional>

namespace drnav {

struct NavCommand {
    ImageCoords x;
    double v = 0.0;

    bool valid() const
    {
        return std::isfinite(x.x) && std::isfinite(x.y) && std::abs(x.x) <= 1.0 && std::abs(x.y) <= 1.0 && v >= 0.0 &&
               v <= 1.0;
    }
};

enum class NavMode { nav_direction, gate_center };

struct ControllerGains {
    double kp = 6.0;            ///< 1/s^2
    double kv = 4.5;            ///< 1/s
    double kr = 400.0;          ///< attitude, 1/s^2 (scaled by inertia)
    double kw = 40.0;           ///< body rate, 1/s
    double drag_feedforward = 0.0;  ///< linear drag coefficient compensated in the reference, 1/s
    double max_tilt = 1.2;      ///< rad
};

struct PilotConfig {
    double v_max = 6.0;
    double l_min = 0.0;
    double l_max = 3.0;
    double m_l = 5.0;
    double replan_period = 0.1;
    NavMode mode = NavMode::nav_direction;
    ControllerGains gains;
    int image_width = 64;
    int image_height = 48;

    void validate() const
    {
        if (!(v_max > 0.0)) throw Error("pilot config: v_max must be positive");
        if (!(replan_period > 0.0)) throw Error("pilot config: replan_period must be positive");
        if (!(l_min >= 0.0 && l_min <= l_max) || !(m_l >= 0.0)) throw Error("pilot config: bad planning length bounds");
    }
};

struct LocalPlan {
    PiecewiseTrajectory traj;
    NavCommand cmd;
    Vec3 goal = Vec3::Zero();
    double length = 0.0;   ///< planning length, m
    double v_des = 0.0;
    double t_start = 0.0;  ///< simulation time the plan starts at
    bool hold = false;
};

inline PiecewiseTrajectory hold_trajectory(const Vec3& p, double duration)
{
    PolySegment seg;
    seg.duration = duration;
    seg.coeffs.resize(3, 1);
    seg.coeffs.col(0) = p;
    return PiecewiseTrajectory({std::move(seg)}, false);
}

/// Local minimum-jerk trajectory from the current state to the goal on the
/// commanded ray. `accel` is the current acceleration estimate.
inline LocalPlan plan_local(const NavCommand& cmd, const DroneState& state, const Vec3& accel, const CameraModel& cam,
                            const PilotConfig& cfg)
{
    if (!cmd.valid()) throw Error("plan_local: invalid command");
    LocalPlan plan;
    plan.cmd = cmd;
    plan.t_start = state.t;
    plan.length = planning_length(cmd.v, cfg.l_min, cfg.l_max, cfg.m_l);
    plan.v_des = cfg.v_max * cmd.v;
    if (plan.length <= 0.0) {
        plan.hold = true;
        plan.goal = state.position;
        plan.traj = hold_trajectory(state.position, cfg.replan_period);
        return plan;
    }
    plan.goal = goal_from_ray(cmd.x, plan.length, state.pose(), cam);
    const Vec3 dir = (plan.goal - state.position).normalized();
    const double T = std::clamp(2.0 * plan.length / std::max(state.velocity.norm() + plan.v_des, 0.1), 0.1, 5.0);
    plan.traj = min_jerk_segment({state.position, state.velocity, accel}, {plan.goal, plan.v_des * dir, Vec3::Zero()}, T);
    return plan;
}

struct ControlOutput {
    ControlInput input;
    Vec3 a_des = Vec3::Zero();
    Quat attitude_des = Quat::Identity();
};

namespace detail {

/// Desired attitude for a desired acceleration and heading, with a tilt limit.
inline Mat3 desired_rotation(const Vec3& a_des, double yaw, const QuadrotorParams& prm, double max_tilt)
{
    Vec3 f = a_des - prm.gravity_vector();
    if (f.norm() < 1e-6) f = Vec3::UnitZ();
    Vec3 z = f.normalized();
    const double tilt = std::acos(std::clamp(z.z(), -1.0, 1.0));
    if (tilt > max_tilt) {
        Vec3 h(z.x(), z.y(), 0.0);
        h = h.norm() > 1e-12 ? h.normalized() : Vec3::UnitX();
        z = std::cos(max_tilt) * Vec3::UnitZ() + std::sin(max_tilt) * h;
    }
    const Vec3 xc(std::cos(yaw), std::sin(yaw), 0.0);
    Vec3 y = z.cross(xc);
    if (y.norm() < 1e-9) y = z.cross(Vec3::UnitX());
    y.normalize();
    const Vec3 x = y.cross(z);
    Mat3 r;
    r << x, y, z;
    return r;
}

inline double heading_of(const Vec3& v_ref, const Quat& current)
{
    if (Vec3(v_ref.x(), v_ref.y(), 0.0).norm() > 0.2) return std::atan2(v_ref.y(), v_ref.x());
    const Vec3 bx = current * Vec3::UnitX();
    return std::atan2(bx.y(), bx.x());
}

}  // namespace detail

/// Geometric position/attitude cascade tracking `traj` at local time `t_local`.
/// Heading follows the reference velocity; below 0.2 m/s the current heading is kept.
inline ControlOutput track(const PiecewiseTrajectory& traj, const DroneState& state, double t_local, const PilotConfig& cfg,
                           const QuadrotorParams& prm = {})
{
    const ControllerGains& g = cfg.gains;
    const double T = traj.total_time();
    const double t = traj.periodic() ? t_local : std::clamp(t_local, 0.0, T);
    const TrajectorySample ref = traj.sample(t);

    ControlOutput out;
    out.a_des = ref.acceleration + g.drag_feedforward * ref.velocity + g.kp * (ref.position - state.position) +
                g.kv * (ref.velocity - state.velocity);
    const Mat3 rd = detail::desired_rotation(out.a_des, detail::heading_of(ref.velocity, state.orientation), prm, g.max_tilt);
    out.attitude_des = Quat(rd);

    // body-rate feedforward from the reference-only attitude a short time ahead
    constexpr double kDt = 0.01;
    const double t2 = traj.periodic() ? t + kDt : std::min(t + kDt, T);
    Vec3 w_des = Vec3::Zero();
    if (t2 > t) {
        const TrajectorySample r2 = traj.sample(t2);
        const Mat3 ra = detail::desired_rotation(ref.acceleration + g.drag_feedforward * ref.velocity,
                                                 detail::heading_of(ref.velocity, state.orientation), prm, g.max_tilt);
        const Mat3 rb = detail::desired_rotation(r2.acceleration + g.drag_feedforward * r2.velocity,
                                                 detail::heading_of(r2.velocity, state.orientation), prm, g.max_tilt);
        const Eigen::AngleAxisd delta(Mat3(ra.transpose() * rb));
        w_des = delta.axis() * (delta.angle() / (t2 - t));
    }

    const Mat3 r = state.orientation.normalized().toRotationMatrix();
    const Vec3 e_r = 0.5 * vee(rd.transpose() * r - r.transpose() * rd);
    const Vec3 e_w = state.body_rates - r.transpose() * rd * w_des;
    const Vec3 w = state.body_rates;
    const Vec3 jw = prm.inertia.cwiseProduct(w);
    out.input.torques = prm.inertia.cwiseProduct(-g.kr * e_r - g.kw * e_w) + w.cross(jw);
    out.input.thrust = prm.mass * (out.a_des - prm.gravity_vector()).dot(r.col(2));
    out.input = saturate(out.input, prm);
    return out;
}

/// What a policy sees at a replan tick.
struct PolicyInput {
    const DroneState& state;
    const World& world;
    int next_gate;
    const Image* image;  ///< null when the policy does not need one
    const std::array<float, kFeatureDim>& features;
};

struct PolicyOutput {
    NavCommand cmd;
    std::optional<ImageCoords> gate_center;  ///< predicted or true next-gate image position
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual PolicyOutput query(const PolicyInput& in) = 0;
    virtual bool needs_image() const { return false; }
};

/// Commands computed from the global trajectory with ground-truth state.
class ExpertPolicy : public Policy {
public:
    ExpertPolicy(std::shared_ptr<const ExpertReference> ref, ExpertConfig cfg, CameraModel cam, double v_max)
        : ref_(std::move(ref)), cfg_(cfg), cam_(cam), v_max_(v_max)
    {
    }

    ExpertLabel label(const DroneState& s, const World& w, int next_gate) const
    {
        return expert_label(s, *ref_, w, next_gate, cam_, cfg_, v_max_);
    }

    PolicyOutput query(const PolicyInput& in) override
    {
        const ExpertLabel l = label(in.state, in.world, in.next_gate);
        return {{l.x_g, l.v_g}, l.s_g};
    }

    const ExpertReference& reference() const { return *ref_; }

private:
    std::shared_ptr<const ExpertReference> ref_;
    ExpertConfig cfg_;
    CameraModel cam_;
    double v_max_;
};

class NetworkPolicy : public Policy {
public:
    explicit NetworkPolicy(std::shared_ptr<const NetParams<float>> params) : params_(std::move(params)) {}

    PolicyOutput query(const PolicyInput& in) override
    {
        if (in.image == nullptr) throw Error("network policy: no image");
        const NavTargets o = forward(NetInput{in.image->rgb, std::span<const float, kFeatureDim>(in.features)}, *params_);
        PolicyOutput out{{o.x, o.v}, std::nullopt};
        if (params_->config.arch == NetArch::full) out.gate_center = o.s;
        return out;
    }

    bool needs_image() const override { return true; }

private:
    std::shared_ptr<const NetParams<float>> params_;
};

/// Network flies unless the drone is farther than `epsilon` from the global
/// trajectory, in which case the expert takes over (strictly greater than).
class MarginSwitchPolicy : public Policy {
public:
    MarginSwitchPolicy(std::shared_ptr<ExpertPolicy> expert, std::shared_ptr<Policy> learner, double epsilon)
        : expert_(std::move(expert)), learner_(std::move(learner)), epsilon_(epsilon)
    {
        if (!(epsilon >= 0.0)) throw Error("margin policy: epsilon must be non-negative");
    }

    /// A zero margin means the expert always flies, even exactly on the trajectory.
    static bool expert_active(double distance, double epsilon) { return epsilon == 0.0 || distance > epsilon; }

    PolicyOutput query(const PolicyInput& in) override
    {
        last_distance_ = closest_point(expert_->reference().traj, in.state.position).distance;
        last_expert_ = expert_active(last_distance_, epsilon_);
        return last_expert_ ? expert_->query(in) : learner_->query(in);
    }

    bool needs_image() const override { return learner_->needs_image(); }
    bool last_was_expert() const { return last_expert_; }
    double last_distance() const { return last_distance_; }

private:
    std::shared_ptr<ExpertPolicy> expert_;
    std::shared_ptr<Policy> learner_;
    double epsilon_;
    double last_distance_ = 0.0;
    bool last_expert_ = false;
};

struct PilotDiagnostics {
    NavCommand cmd;
    Vec3 goal = Vec3::Zero();
    bool replanned = false;
    bool fallback = false;     ///< policy failed and a hold plan is active
    int replans = 0;
    const LocalPlan* plan = nullptr;
};

/// Receding-horizon loop for one episode: replans every `replan_period`,
/// tracks the active local trajectory in between.
class Pilot {
public:
    Pilot(PilotConfig cfg, CameraModel cam, QuadrotorParams prm = {}) : cfg_(cfg), cam_(cam), prm_(prm)
    {
        cfg_.validate();
        cam_.validate();
    }

    void reset(const DroneState& s)
    {
        history_.assign(kFeatureHistory + 1, s);
        plan_.reset();
        next_replan_ = s.t;
        last_input_ = {prm_.mass * prm_.gravity, Vec3::Zero()};
        replans_ = 0;
        image_.reset();
    }

    /// One control step. Replans first when the schedule is due.
    ControlInput step(const DroneState& s, const World& world, int next_gate, Policy& policy)
    {
        if (history_.empty()) reset(s);
        diag_.replanned = false;
        if (!plan_ || s.t >= next_replan_ - 1e-9) {
            replan(s, world, next_gate, policy);
            next_replan_ += cfg_.replan_period;
            if (next_replan_ <= s.t) next_replan_ = s.t + cfg_.replan_period;
        }
        const ControlOutput out = track(plan_->traj, s, s.t - plan_->t_start, cfg_, prm_);
        last_input_ = out.input;
        return out.input;
    }

    /// Features of the three most recent replan ticks, oldest first.
    std::array<float, kFeatureDim> features() const
    {
        std::array<StateFeature, kFeatureHistory> fs;
        for (int i = 0; i < kFeatureHistory; ++i)
            fs[static_cast<std::size_t>(i)] = make_feature(history_[static_cast<std::size_t>(i + 1)], history_[static_cast<std::size_t>(i)]);
        return pack_features(fs);
    }

    const PilotDiagnostics& diagnostics() const { return diag_; }
    const LocalPlan* plan() const { return plan_ ? &*plan_ : nullptr; }
    const Image* last_image() const { return image_ ? &*image_ : nullptr; }
    const PilotConfig& config() const { return cfg_; }
    const CameraModel& camera() const { return cam_; }

    /// Acceleration implied by the last applied control.
    Vec3 acceleration_estimate(const DroneState& s) const
    {
        return prm_.gravity_vector() + (s.orientation.normalized() * Vec3::UnitZ()) * (last_input_.thrust / prm_.mass) -
               prm_.drag * s.velocity;
    }

    bool render_always = false;  ///< render at every tick even if the policy ignores images

private:
    void replan(const DroneState& s, const World& world, int next_gate, Policy& policy)
    {
        history_.pop_front();
        history_.push_back(s);
        const auto feats = features();
        image_.reset();
        if (policy.needs_image() || render_always)
            image_ = render(world, s.pose(), cam_, cfg_.image_width, cfg_.image_height);
        diag_.fallback = false;
        try {
            const PolicyOutput po = policy.query({s, world, next_gate, image_ ? &*image_ : nullptr, feats});
            NavCommand cmd = po.cmd;
            if (cfg_.mode == NavMode::gate_center) {
                if (!po.gate_center) throw Error("pilot: gate-center mode needs a gate prediction");
                cmd.x = *po.gate_center;
            }
            plan_ = plan_local(cmd, s, acceleration_estimate(s), cam_, cfg_);
        } catch (const Error&) {
            LocalPlan hold;
            hold.hold = true;
            hold.goal = s.position;
            hold.t_start = s.t;
            hold.traj = hold_trajectory(s.position, cfg_.replan_period);
            plan_ = std::move(hold);
            diag_.fallback = true;
        }
        ++replans_;
        diag_.replanned = true;
        diag_.replans = replans_;
        diag_.cmd = plan_->cmd;
        diag_.goal = plan_->goal;
        diag_.plan = &*plan_;
    }

    PilotConfig cfg_;
    CameraModel cam_;
    QuadrotorParams prm_;
    std::deque<DroneState> history_;
    std::optional<LocalPlan> plan_;
    std::optional<Image> image_;
    ControlInput last_input_;
    double next_replan_ = 0.0;
    int replans_ = 0;
    PilotDiagnostics diag_;
};

}  // namespace drnav
