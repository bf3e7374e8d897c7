#pragma once

#include "drnav/dynamics.hpp"
#include "drnav/expert.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace drnav {

inline constexpr int kFeatureHistory = 3;
inline constexpr int kFeatureDim = 12 * kFeatureHistory;
inline constexpr int kLabelDim = 9;

/// Per-tick drone state summary fed to the network.
struct StateFeature {
    Vec3 delta_position = Vec3::Zero();  ///< world, change since the previous tick
    Vec3 euler = Vec3::Zero();           ///< yaw, pitch, roll
    Vec3 v_body = Vec3::Zero();
    Vec3 omega_body = Vec3::Zero();
};

inline StateFeature make_feature(const DroneState& now, const DroneState& prev)
{
    StateFeature f;
    f.delta_position = now.position - prev.position;
    f.euler = euler_zyx(now.orientation);
    f.v_body = now.orientation.conjugate() * now.velocity;
    f.omega_body = now.body_rates;
    return f;
}

/// Flattens three features, oldest first.
inline std::array<float, kFeatureDim> pack_features(const std::array<StateFeature, kFeatureHistory>& fs)
{
    std::array<float, kFeatureDim> out{};
    std::size_t k = 0;
    for (const auto& f : fs)
        for (const Vec3* v : {&f.delta_position, &f.euler, &f.v_body, &f.omega_body})
            for (int i = 0; i < 3; ++i) out[k++] = static_cast<float>((*v)(i));
    return out;
}

/// Supervised outputs in storage order: x (2), v, s (2), phi (3), d.
struct NavTargets {
    ImageCoords x;
    double v = 0.0;
    ImageCoords s;
    Vec3 phi = Vec3::Zero();
    double d = 0.0;

    std::array<double, kLabelDim> to_array() const { return {x.x, x.y, v, s.x, s.y, phi.x(), phi.y(), phi.z(), d}; }

    static NavTargets from_array(const std::array<double, kLabelDim>& a)
    {
        return {{a[0], a[1]}, a[2], {a[3], a[4]}, Vec3(a[5], a[6], a[7]), a[8]};
    }

    static NavTargets from_label(const ExpertLabel& l) { return {l.x_g, l.v_g, l.s_g, l.phi_g, l.d_g}; }
};

struct TrainingSample {
    std::uint32_t episode = 0;
    double timestamp = 0.0;
    std::vector<std::uint8_t> image;  ///< width * height * 3, row-major RGB
    std::array<float, kFeatureDim> features{};
    std::array<float, kLabelDim> label{};

    NavTargets targets() const
    {
        std::array<double, kLabelDim> a{};
        for (int i = 0; i < kLabelDim; ++i) a[static_cast<std::size_t>(i)] = label[static_cast<std::size_t>(i)];
        return NavTargets::from_array(a);
    }

    bool operator==(const TrainingSample&) const = default;
};

struct Dataset {
    int width = 64;
    int height = 48;
    std::vector<TrainingSample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    void append(const Dataset& other)
    {
        if (other.width != width || other.height != height) throw Error("dataset: image size mismatch");
        samples.insert(samples.end(), other.samples.begin(), other.samples.end());
    }

    bool operator==(const Dataset&) const = default;
};

inline std::array<float, kLabelDim> pack_label(const ExpertLabel& l)
{
    const auto a = NavTargets::from_label(l).to_array();
    std::array<float, kLabelDim> out{};
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(a[i]);
    return out;
}

}  // namespace drnav
