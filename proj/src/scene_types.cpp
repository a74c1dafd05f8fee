#include "aads/scene_types.hpp"

#include <cmath>

namespace aads {

std::array<Vec3, 8> box_corners(const Vec3& center, const Vec3& size, double yaw)
{
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
        const double lx = ((i & 1) ? 0.5 : -0.5) * size.x();
        const double ly = ((i & 2) ? 0.5 : -0.5) * size.y();
        const double lz = ((i & 4) ? 0.5 : -0.5) * size.z();
        out[static_cast<std::size_t>(i)] = center + Vec3(c * lx - s * ly, s * lx + c * ly, lz);
    }
    return out;
}

std::vector<Triangle> box_triangles(const Vec3& center, const Vec3& size, double yaw, const Rgb& color,
                                    std::uint16_t class_id)
{
    const auto k = box_corners(center, size, yaw);
    // Faces as corner-index quads, counter-clockwise seen from outside.
    static constexpr int kFaces[6][4] = {
        {0, 4, 6, 2}, // -x
        {1, 3, 7, 5}, // +x
        {0, 1, 5, 4}, // -y
        {2, 6, 7, 3}, // +y
        {0, 2, 3, 1}, // -z
        {4, 5, 7, 6}, // +z
    };
    std::vector<Triangle> tris;
    tris.reserve(12);
    for (const auto& f : kFaces) {
        tris.push_back({{k[f[0]], k[f[1]], k[f[2]]}, color, class_id});
        tris.push_back({{k[f[0]], k[f[2]], k[f[3]]}, color, class_id});
    }
    return tris;
}

} // namespace aads
