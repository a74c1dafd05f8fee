#pragma once

#include "aads/geometry.hpp"
#include "aads/laplace.hpp"
#include "aads/scene_types.hpp"
#include "aads/traffic_sim.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace aads {

/// Car, cyclist, pedestrian and truck.
std::set<std::uint16_t> default_movable_classes();

struct RemovalResult {
    ViewSample view; ///< image zeroed, depth invalid, labels unknown inside the holes
    Mask holes;
    std::size_t hole_count = 0;
};

/// Throws std::invalid_argument when the view has no label raster.
RemovalResult remove_moving_objects(const ViewSample& view, const std::set<std::uint16_t>& movable);

/// Fills the masked pixels of each channel with the harmonic interpolant of the unmasked
/// ones. A fully masked image has no boundary and is filled with mid grey.
ImageRaster diffusion_inpaint(const ImageRaster& image, const Mask& mask, const LaplaceOptions& options = {});

/// Box-shaped agent in world coordinates; the box bottom rests at center.z - size.z/2.
struct AgentPlacement {
    AgentClass cls = AgentClass::Car;
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3(4.5, 1.8, 1.5); ///< length along the heading, width, height
    double yaw = 0.0;
    Rgb color = Rgb(0.8, 0.1, 0.1);
};

/// Typical box extents per class.
Vec3 default_agent_size(AgentClass cls);
/// Agents of one logged frame standing on the plane z = ground_z.
std::vector<AgentPlacement> placements_from_log(const TrajectoryLog& log, std::int64_t frame, double ground_z = 0.0);
/// {"agents":[{"class","center":[3],"size":[3],"yaw","color":[3]}]}; size and color optional.
std::vector<AgentPlacement> placements_from_json(const nlohmann::json& j);
nlohmann::json placements_to_json(std::span<const AgentPlacement> agents);

struct ObjectAnnotation {
    AgentClass cls = AgentClass::Car;
    std::array<double, 4> box2d{}; ///< x0, y0, x1, y1 in pixel coordinates
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3::Zero();
    double yaw = 0.0;
    std::uint16_t mask_id = 0;
    std::size_t pixel_count = 0;
};

struct Annotation {
    std::int64_t frame = 0;
    std::vector<ObjectAnnotation> objects;

    nlohmann::json to_json() const;
    static Annotation from_json(const nlohmann::json& j);
};

struct ComposeOptions {
    std::size_t min_mask_pixels = 8;
    Vec3 light = Vec3(0.3, 0.2, 0.93).normalized();
};

struct ComposedFrame {
    ImageRaster image;
    DepthMap depth;
    LabelRaster labels;        ///< class ids of agent pixels, 0 elsewhere
    LabelRaster instance_mask; ///< mask ids of annotated agents, 0 elsewhere
    Annotation annotation;
    std::vector<std::string> diagnostics;
};

/// Tight bound of the projections of the box's corners in front of the camera, plus the
/// points where box edges cross the near plane, intersected with the raster extent
/// [-0.5, w-0.5] x [-0.5, h-0.5]. nullopt when nothing is in front or the bound misses the raster.
std::optional<std::array<double, 4>> projected_box_bounds(const Vec3& center, const Vec3& size, double yaw,
                                                          const Camera& camera);

/// Rasterises the agents as flat-shaded boxes over the background, z-tested against its depth
/// and each other. Agent i gets mask id i + 1. Agents behind the camera or with fewer than
/// min_mask_pixels visible pixels are not annotated and leave no mask pixels; degenerate boxes
/// are skipped with a diagnostic. Throws std::invalid_argument when raster sizes disagree with
/// the camera or there are 65535 or more agents.
ComposedFrame compose_frame(const ImageRaster& background, const DepthMap& background_depth,
                            std::span<const AgentPlacement> agents, const Camera& camera, std::int64_t frame = 0,
                            const ComposeOptions& options = {});

} // namespace aads
