#pragma once

#include "aads/geometry.hpp"
#include "aads/laplace.hpp"

#include "json.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace aads {

/// A reference image resampled into the target view.
struct WarpedView {
    ImageRaster color;
    DepthMap depth_proxy;
    Mask occlusion; ///< 1 = occluded or not covered.
    std::size_t source_index = 0;
};

struct WarpConfig {
    std::size_t reference_count = 4;
    /// Weight of the optical-axis angle in the reference score.
    double angle_weight = 1.0;
    std::size_t max_hole_px = 64;
    double depth_tol = 0.2;
    LaplaceOptions laplace{};

    void validate() const;
    static WarpConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// ||c_ref - c_target|| * (1 + angle_weight * angle(axes) / pi).
double reference_score(const Pose& reference, const Pose& target, double angle_weight = 1.0);

/// Indices of the min(k, n) best references, ascending by score, ties by index.
/// Throws std::invalid_argument for an empty set.
std::vector<std::size_t> select_references(const Pose& target, std::span<const Pose> references,
                                           std::size_t k = 4, double angle_weight = 1.0);
std::vector<std::size_t> select_references(const Pose& target, std::span<const ViewSample> dataset,
                                           std::size_t k = 4, double angle_weight = 1.0);

/// Scatters every valid reference pixel into the target view with a z-buffered 2x2
/// splat. Each covered target pixel receives the depth where its own ray meets the
/// tangent plane of the reference surface at that point (plain point depth where no
/// plane can be estimated), so planar regions warp without staircase error.
DepthMap forward_map_depth(const ViewSample& ref, const Camera& target);

/// Fills 4-connected invalid regions of at most `max_hole_px` pixels by harmonic
/// interpolation; larger regions stay invalid.
DepthMap inpaint_proxy_holes(const DepthMap& proxy, std::size_t max_hole_px = 64,
                             const LaplaceOptions& options = {});

/// Gathers reference colour for every valid proxy pixel. A pixel is occluded when its
/// surface point leaves the reference raster, falls behind the reference camera, or its
/// reference-frame depth differs from the reference depth map by more than depth_tol.
/// Occluded pixels carry an invalid proxy depth.
WarpedView backward_warp(const ViewSample& ref, const DepthMap& target_proxy, const Camera& target,
                         double depth_tol = 0.2);

/// Bilinear colour lookup with clamp-to-edge.
Rgb sample_bilinear(const ImageRaster& image, const Vec2& pixel);

/// Bilinear interpolation of inverse depth over the four surrounding texels; invalid
/// when any of them is invalid or the pixel is outside the raster.
double sample_depth(const DepthMap& depth, const Vec2& pixel);

/// forward map -> inpaint -> backward warp, for one reference.
WarpedView warp_reference(const ViewSample& ref, std::size_t source_index, const Camera& target,
                          const WarpConfig& cfg);

} // namespace aads
