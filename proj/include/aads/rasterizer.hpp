#pragma once

#include "aads/geometry.hpp"

#include <array>
#include <cmath>

namespace aads {

/// Pixels covered by a point splat centred at `pixel`: every pixel centre strictly
/// within one pixel in both axes, i.e. the 2x2 bilinear support. A point landing
/// exactly on a pixel centre touches only that pixel.
template <typename Fn>
void for_each_splat_pixel(const Vec2& pixel, int width, int height, Fn&& fn)
{
    constexpr double kReach = 1.0 - 1e-6;
    const int x0 = static_cast<int>(std::ceil(pixel.x() - kReach));
    const int x1 = static_cast<int>(std::floor(pixel.x() + kReach));
    const int y0 = static_cast<int>(std::ceil(pixel.y() - kReach));
    const int y1 = static_cast<int>(std::floor(pixel.y() + kReach));
    for (int y = std::max(y0, 0); y <= std::min(y1, height - 1); ++y)
        for (int x = std::max(x0, 0); x <= std::min(x1, width - 1); ++x)
            fn(x, y);
}

inline constexpr double kNearPlane = 1e-3;

namespace detail {

struct ScreenVertex {
    double x, y, inv_z;
};

template <typename Fn>
void raster_screen_triangle(const ScreenVertex& a, const ScreenVertex& b, const ScreenVertex& c, int width,
                            int height, Fn& fn)
{
    const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (std::abs(area) < 1e-14)
        return;
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(std::max({a.y, b.y, c.y}))));
    const double inv_area = 1.0 / area;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double w0 = ((b.x - x) * (c.y - y) - (b.y - y) * (c.x - x)) * inv_area;
            const double w1 = ((c.x - x) * (a.y - y) - (c.y - y) * (a.x - x)) * inv_area;
            const double w2 = 1.0 - w0 - w1;
            if (w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12)
                continue;
            const double inv_z = w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z;
            if (inv_z > 0.0)
                fn(x, y, 1.0 / inv_z);
        }
    }
}

} // namespace detail

/// Rasterizes a world-space triangle into the camera's raster, calling
/// fn(x, y, camera_z) for every covered pixel centre. The triangle is clipped
/// against the near plane; depth is perspective-correct.
template <typename Fn>
void rasterize_triangle(const std::array<Vec3, 3>& tri_world, const CameraIntrinsics& intrinsics,
                        const Pose& pose, Fn&& fn)
{
    std::array<Vec3, 3> cam;
    for (int i = 0; i < 3; ++i)
        cam[i] = pose.to_camera(tri_world[i]);

    // Sutherland-Hodgman against z = near; a triangle yields at most 4 vertices.
    std::array<Vec3, 4> poly;
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        const Vec3& p = cam[i];
        const Vec3& q = cam[(i + 1) % 3];
        const bool p_in = p.z() >= kNearPlane;
        const bool q_in = q.z() >= kNearPlane;
        if (p_in)
            poly[n++] = p;
        if (p_in != q_in) {
            const double t = (kNearPlane - p.z()) / (q.z() - p.z());
            poly[n++] = p + t * (q - p);
        }
    }
    if (n < 3)
        return;

    std::array<detail::ScreenVertex, 4> sv;
    for (int i = 0; i < n; ++i) {
        const double z = poly[i].z();
        sv[i] = {intrinsics.fx() * poly[i].x() / z + intrinsics.cx(),
                 intrinsics.fy() * poly[i].y() / z + intrinsics.cy(), 1.0 / z};
    }
    for (int i = 1; i + 1 < n; ++i)
        detail::raster_screen_triangle(sv[0], sv[i], sv[i + 1], intrinsics.width(), intrinsics.height(), fn);
}

} // namespace aads
