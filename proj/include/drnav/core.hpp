#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace drnav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.81;

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

inline Mat3 skew(const Vec3& w)
{
    Mat3 m;
    m << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
         -w.y(), w.x(), 0.0;
    return m;
}

inline Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

/// Portable deterministic random stream.
///
/// std:: distributions are implementation-defined, so every draw in the
/// project goes through this splitmix64 stream instead. Identical seeds give
/// identical sequences on every toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9E3779B97F4A7C15ULL) { next(); }

    std::uint64_t next()
    {
        // splitmix64
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        if (n == 0) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % n;
    }

    bool coin() { return (next() >> 63) != 0; }

    Vec3 in_unit_ball()
    {
        for (;;) {
            Vec3 p(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
            if (p.squaredNorm() <= 1.0) return p;
        }
    }

    Quat rotation()
    {
        // Shoemake's uniform quaternion.
        const double u1 = uniform(), u2 = uniform(), u3 = uniform();
        const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
        return Quat(a * std::sin(2 * kPi * u2), a * std::cos(2 * kPi * u2),
                    b * std::sin(2 * kPi * u3), b * std::cos(2 * kPi * u3));
    }

private:
    std::uint64_t state_;
};

/// Derives an independent child seed, e.g. one per trial.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    Rng r(seed * 0xD1B54A32D192ED03ULL + stream);
    return r.next();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace drnav
