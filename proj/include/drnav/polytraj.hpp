#pragma once

#include "drnav/core.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace drnav {

/// One polynomial piece. Column k of `coeffs` multiplies t^k, t local in [0, duration].
struct PolySegment {
    Eigen::Matrix<double, 3, Eigen::Dynamic> coeffs;
    double duration = 0.0;

    int degree() const { return static_cast<int>(coeffs.cols()) - 1; }

    /// Derivative of order `order` at local time t (Horner).
    Vec3 eval(double t, int order) const
    {
        const int n = static_cast<int>(coeffs.cols());
        Vec3 acc = Vec3::Zero();
        for (int k = n - 1; k >= order; --k) {
            double f = 1.0;
            for (int j = 0; j < order; ++j) f *= static_cast<double>(k - j);
            acc = acc * t + f * coeffs.col(k);
        }
        return acc;
    }
};

struct TrajectorySample {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 acceleration = Vec3::Zero();
    Vec3 jerk = Vec3::Zero();
};

/// Per-axis piecewise polynomial in time. Immutable once built.
class PiecewiseTrajectory {
public:
    PiecewiseTrajectory() = default;

    PiecewiseTrajectory(std::vector<PolySegment> segments, bool periodic)
        : segments_(std::move(segments)), periodic_(periodic)
    {
        if (segments_.empty()) throw Error("trajectory: no segments");
        starts_.reserve(segments_.size());
        double t = 0.0;
        for (const auto& s : segments_) {
            if (!(s.duration > 0.0) || !std::isfinite(s.duration)) throw Error("trajectory: segment duration must be positive");
            if (s.coeffs.cols() < 1 || s.coeffs.cols() > 10) throw Error("trajectory: degree must be in [0, 9]");
            starts_.push_back(t);
            t += s.duration;
        }
        total_ = t;
    }

    const std::vector<PolySegment>& segments() const { return segments_; }
    bool periodic() const { return periodic_; }
    double total_time() const { return total_; }
    bool empty() const { return segments_.empty(); }
    double segment_start(std::size_t i) const { return starts_.at(i); }

    /// Maps t into [0, total]: modulo when periodic, clamped otherwise.
    double wrap(double t) const
    {
        if (periodic_) {
            double w = std::fmod(t, total_);
            if (w < 0.0) w += total_;
            return w;
        }
        return std::clamp(t, 0.0, total_);
    }

    Vec3 derivative(double t, int order) const
    {
        const auto [i, tl] = locate(t);
        return segments_[i].eval(tl, order);
    }

    Vec3 position(double t) const { return derivative(t, 0); }
    Vec3 velocity(double t) const { return derivative(t, 1); }

    TrajectorySample sample(double t) const
    {
        const auto [i, tl] = locate(t);
        const auto& s = segments_[i];
        return {s.eval(tl, 0), s.eval(tl, 1), s.eval(tl, 2), s.eval(tl, 3)};
    }

private:
    std::pair<std::size_t, double> locate(double t) const
    {
        if (segments_.empty()) throw Error("trajectory: empty");
        const double w = wrap(t);
        auto it = std::upper_bound(starts_.begin(), starts_.end(), w);
        std::size_t i = it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin()) - 1;
        i = std::min(i, segments_.size() - 1);
        return {i, std::min(w - starts_[i], segments_[i].duration)};
    }

    std::vector<PolySegment> segments_;
    std::vector<double> starts_;
    bool periodic_ = false;
    double total_ = 0.0;
};

inline TrajectorySample sample(const PiecewiseTrajectory& traj, double t) { return traj.sample(t); }

/// Max speed over uniform 1 kHz sampling (plus the final instant).
inline double max_speed(const PiecewiseTrajectory& traj)
{
    if (traj.empty()) return 0.0;
    constexpr double dt = 1e-3;
    const double total = traj.total_time();
    double best = traj.velocity(total).norm();
    const auto n = static_cast<long>(std::floor(total / dt));
    for (long i = 0; i <= n; ++i) best = std::max(best, traj.velocity(static_cast<double>(i) * dt).norm());
    return best;
}

// ---------------------------------------------------------------------------
// Minimum-jerk quintic

struct BoundaryState {
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();
};

/// The unique quintic matching position, velocity and acceleration at both ends.
inline PiecewiseTrajectory min_jerk_segment(const BoundaryState& start, const BoundaryState& end, double duration)
{
    if (!(duration > 0.0) || !std::isfinite(duration)) throw Error("min_jerk_segment: duration must be positive");
    const double T = duration, T2 = T * T, T3 = T2 * T;
    const Vec3 h = end.p - (start.p + start.v * T + 0.5 * start.a * T2);
    const Vec3 dv = end.v - (start.v + start.a * T);
    const Vec3 da = end.a - start.a;

    PolySegment seg;
    seg.duration = T;
    seg.coeffs.resize(3, 6);
    seg.coeffs.col(0) = start.p;
    seg.coeffs.col(1) = start.v;
    seg.coeffs.col(2) = 0.5 * start.a;
    seg.coeffs.col(3) = (10.0 * h - 4.0 * dv * T + 0.5 * da * T2) / T3;
    seg.coeffs.col(4) = (-15.0 * h + 7.0 * dv * T - da * T2) / (T3 * T);
    seg.coeffs.col(5) = (6.0 * h - 3.0 * dv * T + 0.5 * da * T2) / (T3 * T2);
    return PiecewiseTrajectory({std::move(seg)}, false);
}

// ---------------------------------------------------------------------------
// Minimum-snap through waypoints

/// Integrated squared snap, evaluated exactly from the coefficients.
inline double snap_cost(const PiecewiseTrajectory& traj)
{
    double cost = 0.0;
    for (const auto& s : traj.segments()) {
        const int n = static_cast<int>(s.coeffs.cols());
        for (int i = 4; i < n; ++i) {
            for (int j = 4; j < n; ++j) {
                const double fi = i * (i - 1) * (i - 2) * (i - 3);
                const double fj = j * (j - 1) * (j - 2) * (j - 3);
                const int p = i + j - 7;
                cost += fi * fj * std::pow(s.duration, p) / p * s.coeffs.col(i).dot(s.coeffs.col(j));
            }
        }
    }
    return cost;
}

namespace detail {

inline double falling(int k, int order)
{
    double f = 1.0;
    for (int j = 0; j < order; ++j) f *= static_cast<double>(k - j);
    return f;
}

}  // namespace detail

/// Minimum-snap septic spline through `waypoints` with fixed segment durations.
///
/// Solved as the KKT system of  min sum_i int snap^2  s.t. interpolation,
/// C4 continuity at every knot (including the wrap knot when periodic) and,
/// for open curves, zero velocity/acceleration/jerk at both ends. Each segment
/// is parameterized on normalized time tau = t / T for conditioning.
inline PiecewiseTrajectory min_snap_with_durations(std::span<const Vec3> waypoints, std::span<const double> durations,
                                                   bool periodic)
{
    constexpr int kCoef = 8;
    constexpr int kCont = 4;
    const int m = static_cast<int>(waypoints.size());
    if (m < 2) throw Error("min_snap: need at least two waypoints");
    const int n = periodic ? m : m - 1;
    if (static_cast<int>(durations.size()) != n) throw Error("min_snap: duration count mismatch");

    const int nv = kCoef * n;
    const int nc = periodic ? n * (2 + kCont) : 2 * n + kCont * (n - 1) + 6;

    // Normalized-time snap Hessian.
    Eigen::Matrix<double, kCoef, kCoef> qn = Eigen::Matrix<double, kCoef, kCoef>::Zero();
    for (int i = 4; i < kCoef; ++i)
        for (int j = 4; j < kCoef; ++j)
            qn(i, j) = detail::falling(i, 4) * detail::falling(j, 4) / (i + j - 7);

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + nc, nv + nc);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nv + nc, 3);
    for (int s = 0; s < n; ++s)
        kkt.block(s * kCoef, s * kCoef, kCoef, kCoef) = 2.0 * qn / std::pow(durations[s], 7);

    int row = nv;
    auto put = [&](int seg, double tau, int order, double scale) {
        for (int k = order; k < kCoef; ++k) {
            const double v = scale * detail::falling(k, order) * std::pow(tau, k - order);
            kkt(row, seg * kCoef + k) += v;
            kkt(seg * kCoef + k, row) += v;
        }
    };
    for (int s = 0; s < n; ++s) {
        put(s, 0.0, 0, 1.0);
        rhs.row(row++) = waypoints[s].transpose();
        put(s, 1.0, 0, 1.0);
        rhs.row(row++) = waypoints[(s + 1) % m].transpose();
    }
    const int knots = periodic ? n : n - 1;
    for (int s = 0; s < knots; ++s) {
        const int nx = (s + 1) % n;
        for (int d = 1; d <= kCont; ++d) {
            put(s, 1.0, d, 1.0 / std::pow(durations[s], d));
            put(nx, 0.0, d, -1.0 / std::pow(durations[nx], d));
            ++row;
        }
    }
    if (!periodic) {
        for (int d = 1; d <= 3; ++d) {
            put(0, 0.0, d, 1.0);
            ++row;
            put(n - 1, 1.0, d, 1.0);
            ++row;
        }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible())
        throw Error("min_snap: singular constraint system (rank " + std::to_string(lu.rank()) + " of " +
                    std::to_string(kkt.rows()) + ")");
    const Eigen::MatrixXd sol = lu.solve(rhs);
    const double resid = (kkt * sol - rhs).cwiseAbs().maxCoeff();
    if (!std::isfinite(resid) || resid > 1e-6 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
        throw Error("min_snap: ill-conditioned constraint system (residual " + std::to_string(resid) + ")");

    std::vector<PolySegment> segs(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        auto& seg = segs[static_cast<std::size_t>(s)];
        seg.duration = durations[s];
        seg.coeffs.resize(3, kCoef);
        for (int k = 0; k < kCoef; ++k)
            seg.coeffs.col(k) = sol.row(s * kCoef + k).transpose() / std::pow(durations[s], k);
    }
    return PiecewiseTrajectory(std::move(segs), periodic);
}

/// Minimum-snap spline whose sampled peak speed equals `v_max`.
///
/// Durations start proportional to waypoint spacing and are then scaled
/// uniformly; the optimum is equivariant under time scaling, so one or two
/// rescales suffice.
inline PiecewiseTrajectory min_snap_global(std::span<const Vec3> waypoints, double v_max, bool periodic)
{
    if (waypoints.size() < 2) throw Error("min_snap: need at least two waypoints");
    if (!(v_max > 0.0)) throw Error("min_snap: v_max must be positive");
    const std::size_t m = waypoints.size();
    const std::size_t n = periodic ? m : m - 1;
    std::vector<double> dur(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (waypoints[(i + 1) % m] - waypoints[i]).norm();
        if (!(d > 1e-6)) throw Error("min_snap: coincident consecutive waypoints at index " + std::to_string(i));
        dur[i] = d / v_max;
    }
    PiecewiseTrajectory traj = min_snap_with_durations(waypoints, dur, periodic);
    for (int it = 0; it < 6; ++it) {
        const double peak = max_speed(traj);
        if (!(peak > 0.0)) throw Error("min_snap: degenerate trajectory");
        const double ratio = peak / v_max;
        if (std::abs(ratio - 1.0) < 1e-4) break;
        for (auto& d : dur) d *= ratio;
        traj = min_snap_with_durations(waypoints, dur, periodic);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Geometric queries

struct ClosestPoint {
    double t = 0.0;
    TrajectorySample sample;
    double distance = 0.0;
};

/// Closest point: 1000-sample coarse grid then golden-section refinement on
/// the bracketing interval. Never worse than the grid minimum.
inline ClosestPoint closest_point(const PiecewiseTrajectory& traj, const Vec3& p)
{
    constexpr int kGrid = 1000;
    const double total = traj.total_time();
    const double step = traj.periodic() ? total / kGrid : total / (kGrid - 1);
    auto dist2 = [&](double t) { return (traj.position(t) - p).squaredNorm(); };

    int best_i = 0;
    double best = dist2(0.0);
    for (int i = 1; i < kGrid; ++i) {
        const double d = dist2(i * step);
        if (d < best) {
            best = d;
            best_i = i;
        }
    }
    double lo = (best_i - 1) * step, hi = (best_i + 1) * step;
    if (!traj.periodic()) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, total);
    }
    constexpr double kInvPhi = 0.6180339887498949;
    double a = hi - kInvPhi * (hi - lo), b = lo + kInvPhi * (hi - lo);
    double fa = dist2(a), fb = dist2(b);
    for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - kInvPhi * (hi - lo);
            fa = dist2(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + kInvPhi * (hi - lo);
            fb = dist2(b);
        }
    }
    double t_best = best_i * step;
    const double tm = 0.5 * (lo + hi);
    if (dist2(tm) < best) {
        t_best = tm;
        best = dist2(tm);
    }
    t_best = traj.wrap(t_best);
    return {t_best, traj.sample(t_best), std::sqrt(best)};
}

struct ForwardPoint {
    Vec3 point = Vec3::Zero();
    double t = 0.0;
    bool fallback = false;
};

/// Marches forward from t_start in 1 ms steps and returns the first sample
/// whose Euclidean distance from p_c reaches d. If none is found within arc
/// length 2d (or before an open trajectory ends) the point at arc length d is
/// returned with `fallback` set.
inline ForwardPoint forward_point(const PiecewiseTrajectory& traj, double t_start, const Vec3& p_c, double d)
{
    if (!(d > 0.0)) throw Error("forward_point: distance must be positive");
    constexpr double dt = 1e-3;
    const double t_end = traj.periodic() ? t_start + 2.0 * traj.total_time() : traj.total_time();
    double t = traj.periodic() ? t_start : traj.wrap(t_start);
    Vec3 prev = traj.position(t);
    double arc = 0.0;
    ForwardPoint at_arc_d{prev, traj.wrap(t), true};
    bool have_arc_d = false;
    while (t < t_end) {
        t = std::min(t + dt, t_end);
        const Vec3 cur = traj.position(t);
        arc += (cur - prev).norm();
        prev = cur;
        if ((cur - p_c).norm() >= d) return {cur, traj.wrap(t), false};
        if (!have_arc_d && arc >= d) {
            at_arc_d = {cur, traj.wrap(t), true};
            have_arc_d = true;
        }
        if (arc >= 2.0 * d) break;
    }
    if (!have_arc_d) at_arc_d = {prev, traj.wrap(t), true};
    return at_arc_d;
}

}  // namespace drnav
