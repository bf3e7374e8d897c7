#pragma once

#include "drnav/texture.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace drnav {

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  ///< row-major, 3 bytes per pixel

    std::uint8_t at(int x, int y, int c) const
    {
        return rgb[static_cast<std::size_t>((y * width + x) * 3 + c)];
    }
    bool operator==(const Image&) const = default;
};

/// Per-pixel surface labels of a render.
enum SurfaceId : std::int16_t { kSky = -1, kFloor = 0, kWall = 1, kFirstGate = 2 };

struct RenderResult {
    Image image;
    std::vector<std::int16_t> surface;  ///< kSky, kFloor, kWall or kFirstGate + gate index
};

namespace detail {

struct RasterVertex {
    Vec3 cam;                   // camera frame, x forward
    Eigen::Vector2d uv;         // texture coordinates in meters
};

struct TexturedQuad {
    std::array<RasterVertex, 4> v;
    const ProceduralTexture* tex = nullptr;
    double shade = 1.0;
    std::int16_t surface = kSky;
};

class Rasterizer {
public:
    Rasterizer(int w, int h, const CameraModel& cam, double illumination)
        : w_(w), h_(h), th_(cam.tan_half_h()), tv_(cam.tan_half_v()), illum_(illumination)
    {
        out_.image.width = w;
        out_.image.height = h;
        const Eigen::Vector3d sky(0.55, 0.70, 0.90);
        color_.assign(static_cast<std::size_t>(w * h), sky);
        depth_.assign(static_cast<std::size_t>(w * h), std::numeric_limits<double>::infinity());
        out_.surface.assign(static_cast<std::size_t>(w * h), kSky);
    }

    void draw(const TexturedQuad& q)
    {
        // Clip against the near plane (Sutherland-Hodgman on one plane).
        constexpr double kNear = 0.05;
        std::vector<RasterVertex> poly;
        for (int i = 0; i < 4; ++i) {
            const auto& a = q.v[static_cast<std::size_t>(i)];
            const auto& b = q.v[static_cast<std::size_t>((i + 1) % 4)];
            const bool ina = a.cam.x() >= kNear, inb = b.cam.x() >= kNear;
            if (ina) poly.push_back(a);
            if (ina != inb) {
                const double s = (kNear - a.cam.x()) / (b.cam.x() - a.cam.x());
                poly.push_back({a.cam + s * (b.cam - a.cam), a.uv + s * (b.uv - a.uv)});
            }
        }
        if (poly.size() < 3) return;
        for (std::size_t i = 1; i + 1 < poly.size(); ++i) triangle(poly[0], poly[i], poly[i + 1], q);
    }

    RenderResult finish()
    {
        out_.image.rgb.resize(static_cast<std::size_t>(w_ * h_ * 3));
        for (std::size_t i = 0; i < color_.size(); ++i) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::round(255.0 * color_[i](c) * illum_);
                out_.image.rgb[i * 3 + static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
        }
        return std::move(out_);
    }

private:
    Eigen::Vector2d to_screen(const Vec3& p) const
    {
        const double u = -p.y() / (p.x() * th_), v = -p.z() / (p.x() * tv_);
        return {0.5 * (u + 1.0) * w_, 0.5 * (v + 1.0) * h_};
    }

    void triangle(const RasterVertex& a, const RasterVertex& b, const RasterVertex& c, const TexturedQuad& q)
    {
        const Eigen::Vector2d sa = to_screen(a.cam), sb = to_screen(b.cam), sc = to_screen(c.cam);
        const double area = (sb - sa).x() * (sc - sa).y() - (sb - sa).y() * (sc - sa).x();
        if (std::abs(area) < 1e-12) return;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({sa.x(), sb.x(), sc.x()}))));
        const int x1 = std::min(w_ - 1, static_cast<int>(std::ceil(std::max({sa.x(), sb.x(), sc.x()}))));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({sa.y(), sb.y(), sc.y()}))));
        const int y1 = std::min(h_ - 1, static_cast<int>(std::ceil(std::max({sa.y(), sb.y(), sc.y()}))));
        const double iza = 1.0 / a.cam.x(), izb = 1.0 / b.cam.x(), izc = 1.0 / c.cam.x();
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Eigen::Vector2d p(x + 0.5, y + 0.5);
                auto edge = [](const Eigen::Vector2d& s, const Eigen::Vector2d& e, const Eigen::Vector2d& r) {
                    return (e - s).x() * (r - s).y() - (e - s).y() * (r - s).x();
                };
                double wa = edge(sb, sc, p) / area, wb = edge(sc, sa, p) / area, wc = edge(sa, sb, p) / area;
                if (wa < 0.0 || wb < 0.0 || wc < 0.0) continue;
                const double iz = wa * iza + wb * izb + wc * izc;
                const double depth = 1.0 / iz;
                const std::size_t idx = static_cast<std::size_t>(y * w_ + x);
                if (!(depth < depth_[idx])) continue;
                const Eigen::Vector2d uv = (wa * iza * a.uv + wb * izb * b.uv + wc * izc * c.uv) / iz;
                depth_[idx] = depth;
                color_[idx] = q.shade * q.tex->at(uv.x(), uv.y());
                out_.surface[idx] = q.surface;
            }
        }
    }

    int w_, h_;
    double th_, tv_, illum_;
    std::vector<Eigen::Vector3d> color_;
    std::vector<double> depth_;
    RenderResult out_;
};

}  // namespace detail

/// Depth-buffered software rasterization of floor, bounding walls and gate
/// frames. Pixel values are texture * surface shade * illumination, rounded
/// and clamped to 8 bits. Pure function of its inputs.
inline RenderResult render_with_ids(const World& world, const Pose& drone, const CameraModel& cam, int width, int height)
{
    if (width < 16 || height < 16) throw Error("render: resolution must be at least 16x16");
    const Pose cp = camera_pose(drone, cam);
    auto to_cam = [&](const Vec3& p) { return cp.to_body(p); };

    const ProceduralTexture floor_tex(world.floor_texture), wall_tex(world.wall_texture);
    std::vector<ProceduralTexture> gate_tex;
    gate_tex.reserve(world.gates.size());
    for (const auto& g : world.gates) gate_tex.emplace_back(g.texture_seed);

    detail::Rasterizer r(width, height, cam, world.illumination);
    auto quad = [&](std::array<Vec3, 4> pts, std::array<Eigen::Vector2d, 4> uv, const ProceduralTexture& tex, double shade,
                    std::int16_t id) {
        detail::TexturedQuad q;
        for (std::size_t i = 0; i < 4; ++i) q.v[i] = {to_cam(pts[i]), uv[i]};
        q.tex = &tex;
        q.shade = shade;
        q.surface = id;
        r.draw(q);
    };

    const Vec3 lo = world.bounds.min, hi = world.bounds.max;
    quad({Vec3(lo.x(), lo.y(), lo.z()), Vec3(hi.x(), lo.y(), lo.z()), Vec3(hi.x(), hi.y(), lo.z()), Vec3(lo.x(), hi.y(), lo.z())},
         {Eigen::Vector2d(lo.x(), lo.y()), {hi.x(), lo.y()}, {hi.x(), hi.y()}, {lo.x(), hi.y()}}, floor_tex, 1.0, kFloor);
    const std::array<Vec3, 4> corners{Vec3(lo.x(), lo.y(), 0), Vec3(hi.x(), lo.y(), 0), Vec3(hi.x(), hi.y(), 0),
                                      Vec3(lo.x(), hi.y(), 0)};
    double along = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        Vec3 a = corners[i], b = corners[(i + 1) % 4];
        a.z() = b.z() = lo.z();
        const double len = (b - a).norm();
        const Vec3 up(0, 0, hi.z() - lo.z());
        quad({a, b, b + up, a + up}, {Eigen::Vector2d(along, lo.z()), {along + len, lo.z()}, {along + len, hi.z()}, {along, hi.z()}},
             wall_tex, 0.85, kWall);
        along += len;
    }

    for (std::size_t gi = 0; gi < world.gates.size(); ++gi) {
        const Gate& g = world.gates[gi];
        const auto inner = gate_outline(g), outer = gate_outline(g, g.frame_band);
        auto w3 = [&](const Eigen::Vector2d& yz) { return g.pose.to_world(Vec3(0.0, yz.x(), yz.y())); };
        const auto id = static_cast<std::int16_t>(kFirstGate + static_cast<int>(gi));
        for (std::size_t k = 0; k < inner.size(); ++k) {
            const std::size_t k1 = (k + 1) % inner.size();
            quad({w3(inner[k]), w3(inner[k1]), w3(outer[k1]), w3(outer[k])}, {inner[k], inner[k1], outer[k1], outer[k]},
                 gate_tex[gi], 1.0, id);
        }
    }
    return r.finish();
}

inline Image render(const World& world, const Pose& drone, const CameraModel& cam, int width, int height)
{
    return render_with_ids(world, drone, cam, width, height).image;
}

}  // namespace drnav
