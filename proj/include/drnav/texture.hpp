#pragma once

#include "drnav/world.hpp"

namespace drnav {

/// Seeded procedural texture evaluated in surface meters.
///
/// Training seeds pick from checker / stripe / value-noise patterns; test
/// seeds pick from brick / dots / warped-noise patterns, so held-out
/// textures differ in kind as well as palette.
class ProceduralTexture {
public:
    enum class Kind { checker, stripe, noise, brick, dots, marble };

    explicit ProceduralTexture(std::uint32_t seed) : seed_(seed)
    {
        Rng r(0xA11CEull ^ (static_cast<std::uint64_t>(seed) << 1));
        const int k = static_cast<int>(r.below(3));
        kind_ = texture_family_of(seed) == TextureFamily::train ? static_cast<Kind>(k) : static_cast<Kind>(3 + k);
        for (auto* c : {&c0_, &c1_}) *c = Eigen::Vector3d(r.uniform(0.1, 1.0), r.uniform(0.1, 1.0), r.uniform(0.1, 1.0));
        scale_ = r.uniform(0.25, 1.5);
        angle_ = r.uniform(0.0, kPi);
    }

    Kind kind() const { return kind_; }

    /// Linear RGB in [0, 1].
    Eigen::Vector3d at(double u, double v) const
    {
        const double ca = std::cos(angle_), sa = std::sin(angle_);
        const double x = (ca * u - sa * v) / scale_, y = (sa * u + ca * v) / scale_;
        double m = 0.0;
        switch (kind_) {
        case Kind::checker:
            m = (static_cast<long>(std::floor(x)) + static_cast<long>(std::floor(y))) & 1 ? 1.0 : 0.0;
            break;
        case Kind::stripe:
            m = std::floor(2.0 * x) - 2.0 * std::floor(x) > 0.5 ? 1.0 : 0.0;
            break;
        case Kind::noise:
            m = 0.65 * value_noise(2 * x, 2 * y) + 0.35 * value_noise(5 * x + 17, 5 * y - 3);
            break;
        case Kind::brick: {
            const double row = std::floor(2.0 * y);
            const double bx = x + (static_cast<long>(row) & 1 ? 0.5 : 0.0);
            const double fx = bx - std::floor(bx), fy = 2.0 * y - row;
            m = fx < 0.08 || fy < 0.12 ? 0.0 : 1.0;
            break;
        }
        case Kind::dots: {
            const double fx = x - std::floor(x) - 0.5, fy = y - std::floor(y) - 0.5;
            m = fx * fx + fy * fy < 0.09 ? 1.0 : 0.0;
            break;
        }
        case Kind::marble:
            m = 0.5 + 0.5 * std::sin(3.0 * x + 6.0 * value_noise(x, y));
            break;
        }
        return c0_ + m * (c1_ - c0_);
    }

private:
    double lattice(long i, long j) const
    {
        std::uint64_t h = (static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ULL) ^
                          (static_cast<std::uint64_t>(j) * 0xC2B2AE3D27D4EB4FULL) ^ seed_;
        h ^= h >> 29;
        h *= 0xBF58476D1CE4E5B9ULL;
        h ^= h >> 32;
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    }

    double value_noise(double x, double y) const
    {
        const double fx = std::floor(x), fy = std::floor(y);
        const auto i = static_cast<long>(fx), j = static_cast<long>(fy);
        double tx = x - fx, ty = y - fy;
        tx = tx * tx * (3 - 2 * tx);
        ty = ty * ty * (3 - 2 * ty);
        const double a = lattice(i, j), b = lattice(i + 1, j), c = lattice(i, j + 1), d = lattice(i + 1, j + 1);
        return (a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty;
    }

    std::uint32_t seed_;
    Kind kind_ = Kind::checker;
    Eigen::Vector3d c0_, c1_;
    double scale_ = 1.0;
    double angle_ = 0.0;
};

}  // namespace drnav
