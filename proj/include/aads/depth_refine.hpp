#pragma once

#include "aads/geometry.hpp"
#include "aads/laplace.hpp"
#include "aads/scene_types.hpp"

#include "json.hpp"

namespace aads {

struct RefineConfig {
    int median_kernel = 5;
    double prune_rel = 0.1;
    double prune_abs = 0.3;
    int guided_radius = 8;
    double guided_eps = 1e-3;
    double poisson_tol = 1e-6;
    int poisson_max_iter = 10000;

    /// Throws std::invalid_argument on an even/small kernel or non-positive tolerances.
    void validate() const;
    LaplaceOptions laplace() const { return {poisson_tol, poisson_max_iter}; }

    static RefineConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Z-buffered splat of a point cloud into the camera: every pixel keeps the nearest
/// camera-frame z of the points whose projection rounds to it.
DepthMap render_point_depth(const PointCloud& cloud, const Camera& view);

/// Drops valid pixels that deviate from the median of the valid values in their window
/// by more than max(prune_rel * median, prune_abs). Windows with fewer than 3 valid
/// values leave the centre alone. Repeats until nothing more is pruned, so the result
/// is a fixed point of the filter.
DepthMap median_prune(const DepthMap& depth, const RefineConfig& cfg);

/// Guided filter on the guide's luminance, restricted to valid depth pixels. Window
/// statistics only use valid pixels; invalid pixels stay invalid.
DepthMap guided_filter(const DepthMap& depth, const ImageRaster& guide, const RefineConfig& cfg);

/// Fills every invalid pixel by harmonic interpolation of the valid ones (4-neighbour
/// discrete Laplace equation, zero flux across the raster border). Valid pixels are
/// untouched. Throws std::invalid_argument when no pixel is valid.
DepthMap poisson_complete(const DepthMap& depth, const RefineConfig& cfg);

/// prune -> guided -> complete.
DepthMap refine_depth(const DepthMap& depth, const ImageRaster& guide, const RefineConfig& cfg);

} // namespace aads
