#pragma once

#include "aads/geometry.hpp"
#include "aads/io.hpp"
#include "aads/scene_types.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace aads {

/// Spinning multi-beam sensor. Angles in degrees; the sensor frame has +z up and
/// azimuth 0 along +x, increasing towards +y.
struct BeamModel {
    std::vector<double> beams; ///< vertical angles, ascending
    double azimuth_step = 0.16;
    double sigma_range = 0.005;
    double sigma_azimuth = 0.05;
    double max_range = 120.0;
    double dropout = 0.0; ///< per-return drop probability
    std::uint64_t rng_seed = 0;

    /// 64 beams evenly spaced over [-24.33, 2] with the default noise.
    static BeamModel hdl64();

    /// Firings per revolution, ceil(360 / azimuth_step).
    std::size_t azimuth_count() const;
    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
    static BeamModel from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Unit direction in the sensor frame.
Vec3 beam_direction(double elevation_deg, double azimuth_deg);

struct BeamFit {
    BeamModel model;                     ///< beams sorted; pooled noise estimates
    std::vector<double> elevation_sigma; ///< per sorted beam, degrees
    std::vector<double> radial_sigma;    ///< per sorted beam, metres
    std::vector<std::size_t> source;     ///< input index of each sorted beam
};

/// Fits one cone per beam to sensor-frame returns. The angle is the mean elevation, the
/// angular noise the sample deviation of elevations and the range noise the spread of the
/// distances to the fitted cone. Throws std::invalid_argument for a beam with fewer than
/// 10 points.
BeamFit fit_beam_model(std::span<const std::vector<Vec3>> beams);

enum class CubeFace : int { PosX = 0, NegX, PosY, NegY, PosZ, NegZ };

struct CubeMapDepth {
    int resolution = 0;
    Pose origin; ///< sensor to world
    std::array<DepthMap, 6> depth;
    std::array<LabelRaster, 6> labels;

    struct Hit {
        double range;
        std::uint16_t class_id;
    };

    /// Face camera in the world: 90 degree pinhole, focal resolution/2.
    Camera face_camera(CubeFace face) const;
    /// Nearest-texel lookup along a sensor-frame direction; nullopt on a miss.
    std::optional<Hit> lookup(const Vec3& direction) const;
};

/// Z-buffered render of points (2x2 splats) and triangles onto the six faces around `origin`.
/// Throws std::invalid_argument for an empty scene or resolution < 1.
CubeMapDepth render_cube_map(const SceneGeometry& scene, const Pose& origin, int resolution = 1024);

struct LidarPoint {
    Vec3 position; ///< sensor frame
    double range = 0.0;
    std::uint8_t beam_id = 0;
    double azimuth = 0.0; ///< nominal firing azimuth, degrees
    std::uint16_t class_id = label::kUnknown;
};

struct LidarScan {
    std::vector<LidarPoint> points;
    Pose pose;
    std::uint64_t frame = 0;
};

/// One instantaneous revolution from the cube map's origin. Noise draws are keyed by
/// (rng_seed, frame, beam, azimuth index) so the result does not depend on evaluation order.
LidarScan cast_scan(const BeamModel& model, const CubeMapDepth& cube, std::uint64_t frame = 0);

/// One scan per pose with frame ids 0..n-1. Throws std::invalid_argument for an empty trajectory.
std::vector<LidarScan> simulate_sequence(const SceneGeometry& scene, std::span<const Pose> trajectory,
                                         const BeamModel& model, int resolution = 1024);

io::PlyTable scan_to_ply(const LidarScan& scan);
/// Throws ParseError when a required property is missing.
LidarScan scan_from_ply(const io::PlyTable& table);

} // namespace aads
