#pragma once

#include "aads/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace aads {

/// Semantic class ids used across the toolkit.
namespace label {
inline constexpr std::uint16_t kUnknown = 0;
inline constexpr std::uint16_t kRoad = 1;
inline constexpr std::uint16_t kBuilding = 2;
inline constexpr std::uint16_t kVegetation = 3;
inline constexpr std::uint16_t kPole = 4;
inline constexpr std::uint16_t kCar = 10;
inline constexpr std::uint16_t kCyclist = 11;
inline constexpr std::uint16_t kPedestrian = 12;
inline constexpr std::uint16_t kTruck = 13;
} // namespace label

struct ScenePoint {
    Vec3 position;
    Rgb color = Rgb::Constant(0.5);
    std::uint16_t class_id = label::kUnknown;
};

using PointCloud = std::vector<ScenePoint>;

struct Triangle {
    std::array<Vec3, 3> vertices;
    Rgb color = Rgb::Constant(0.5);
    std::uint16_t class_id = label::kUnknown;

    Vec3 normal() const { return (vertices[1] - vertices[0]).cross(vertices[2] - vertices[0]).normalized(); }
};

/// Mixed point/mesh scene as consumed by depth rendering and LiDAR simulation.
struct SceneGeometry {
    PointCloud points;
    std::vector<Triangle> triangles;

    bool empty() const { return points.empty() && triangles.empty(); }
};

/// 12 triangles of an oriented box (yaw about world +z), outward winding.
std::vector<Triangle> box_triangles(const Vec3& center, const Vec3& size, double yaw, const Rgb& color,
                                    std::uint16_t class_id);
/// The 8 corners of the same box.
std::array<Vec3, 8> box_corners(const Vec3& center, const Vec3& size, double yaw);

} // namespace aads
