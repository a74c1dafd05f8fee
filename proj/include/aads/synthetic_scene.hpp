#pragma once

#include "aads/geometry.hpp"
#include "aads/scene_types.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace aads {

/// Flat colour, or a two-colour checkerboard when `checker` > 0 (cell size in metres).
struct Texture {
    Rgb color_a = Rgb::Constant(0.5);
    Rgb color_b = Rgb::Constant(0.5);
    double checker = 0.0;
};

struct Primitive {
    enum class Kind { Plane, Box, Sphere };

    Kind kind = Kind::Plane;
    std::uint16_t class_id = label::kUnknown;
    Texture texture;

    // Plane: finite rectangle centre + unit in-plane axes + half extents.
    // Box: centre, full size, yaw about +z. Sphere: centre, radius.
    Vec3 center = Vec3::Zero();
    Vec3 axis_u = Vec3::UnitX();
    Vec3 axis_v = Vec3::UnitY();
    double half_u = 1.0;
    double half_v = 1.0;
    Vec3 size = Vec3::Ones();
    double yaw = 0.0;
    double radius = 1.0;

    Vec3 plane_normal() const { return axis_u.cross(axis_v).normalized(); }
};

struct SceneSpec {
    std::vector<Primitive> primitives;
    /// Surface sampling step for the emitted point cloud.
    double point_spacing = 0.1;
    /// Colour of rays that hit nothing.
    Rgb background = Rgb(0.55, 0.7, 0.9);
    /// Direction towards the light for the fixed Lambert shading.
    Vec3 light = Vec3(0.3, 0.2, 0.93).normalized();

    /// Throws ParseError for unknown primitive types or malformed fields.
    static SceneSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct RayHit {
    double t = 0.0; ///< Distance along the unit ray.
    Vec3 point;
    Vec3 normal;
    Rgb color;
    std::uint16_t class_id = label::kUnknown;
    std::size_t primitive = 0;
};

/// Exact ray caster over the analytic primitives; the ground-truth renderer for every oracle.
class RayTracer {
public:
    explicit RayTracer(SceneSpec spec);

    const SceneSpec& spec() const { return spec_; }

    /// Nearest hit with t > t_min along a unit-length direction.
    std::optional<RayHit> intersect(const Vec3& origin, const Vec3& direction, double t_min = 1e-9) const;

    /// Shaded colour of a surface point (view independent).
    Rgb shade(std::size_t primitive, const Vec3& point, const Vec3& normal) const;

    /// Image (supersample x supersample samples per pixel), camera-z depth and labels
    /// from the pixel-centre ray.
    ViewSample render_view(const Camera& camera, int supersample = 1) const;

private:
    Rgb albedo(std::size_t primitive, const Vec3& point, const Vec3& normal) const;

    SceneSpec spec_;
};

struct SyntheticScene {
    SceneSpec spec;
    SceneGeometry geometry; ///< Point samples and triangle meshes of every primitive.
    RayTracer tracer;
};

/// Throws std::invalid_argument for an empty primitive list.
SyntheticScene make_synthetic_scene(const SceneSpec& spec);

/// Street canyon: checkered road between two building facades closed by a far wall,
/// with a car, a truck, a pole and a tree. World +z is up, the road runs along +x.
SceneSpec demo_scene();

/// Surface points on a regular grid of step `spacing`, coloured like the ray tracer.
PointCloud sample_points(const Primitive& prim, std::size_t index, double spacing, const RayTracer& tracer);
std::vector<Triangle> tessellate(const Primitive& prim, const Rgb& color);

} // namespace aads
