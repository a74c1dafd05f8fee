#pragma once

#include "aads/geometry.hpp"
#include "aads/view_synth.hpp"

#include "json.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace aads {

struct EnergyWeights {
    double lambda1 = 200.0; ///< view-angle data term
    double lambda2 = 1.0;   ///< occlusion term
    double lambda3 = 200.0; ///< truncated colour seam
    double lambda4 = 100.0; ///< truncated depth seam
    double lambda5 = 50.0;  ///< gradient seam
    double tau_c = 0.5;
    double tau_d = 5.0;
    double angle_hook = 0.01;
    /// Multipliers on the camera-distance (m) and axis-angle (rad) factors of the label weight.
    double pos_scale = 1.0;
    double dir_scale = 1.0;

    void validate() const;
    /// Copy with all five lambdas multiplied by `factor`.
    EnergyWeights scaled(double factor) const;
    static EnergyWeights from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Pairwise MRF with one dense cost table per edge. Nodes are visited in index order.
struct Mrf {
    struct Edge {
        std::size_t a = 0; ///< a < b
        std::size_t b = 0;
        std::vector<double> cost; ///< cost[la * num_labels + lb]
    };

    std::size_t num_labels = 0;
    std::vector<double> unary; ///< node-major, num_nodes * num_labels; +inf forbids a label
    std::vector<Edge> edges;

    Mrf() = default;
    Mrf(std::size_t nodes, std::size_t labels);

    std::size_t num_nodes() const { return num_labels ? unary.size() / num_labels : 0; }
    double& unary_at(std::size_t node, std::size_t l) { return unary[node * num_labels + l]; }
    double unary_at(std::size_t node, std::size_t l) const { return unary[node * num_labels + l]; }

    /// Adds edge (u,v) in either order; `cost` is indexed [lu * L + lv] and transposed if u > v.
    void add_edge(std::size_t u, std::size_t v, std::vector<double> cost);

    /// Throws std::invalid_argument for NaN/-inf costs, infinite pairwise costs, bad edges,
    /// or a node without any finite label.
    void validate() const;
};

/// Total energy; +inf when any node takes a forbidden label.
double mrf_energy(const Mrf& mrf, std::span<const std::size_t> labels);

struct TrwsOptions {
    int max_iter = 100;
    double bound_tol = 1e-6;
    /// Break ties between equal-energy labelings by an infinitesimal bias towards lower labels.
    bool tie_break = true;
};

struct TrwsResult {
    std::vector<std::size_t> labels;
    double energy = 0.0;
    double lower_bound = 0.0;
    std::vector<double> bound_history; ///< lower bound after each sweep
    int iterations = 0;
};

/// Sequential tree-reweighted message passing: forward sweep in node order, then backward.
/// The labeling is decoded after every backward sweep by fixing nodes in order against the
/// already fixed neighbours and the incoming messages of the rest (lowest index on ties);
/// the lowest-energy labeling seen is returned.
TrwsResult trws_solve(const Mrf& mrf, const TrwsOptions& options = {});

/// Iterated conditional modes from `init` until no node changes.
std::vector<std::size_t> icm_solve(const Mrf& mrf, std::vector<std::size_t> init, int max_sweeps = 1000);

/// Per-pixel candidate costs, pixel-major.
struct UnaryCosts {
    int width = 0;
    int height = 0;
    std::size_t labels = 0;
    std::vector<double> cost;

    double at(std::size_t pixel, std::size_t j) const { return cost[pixel * labels + j]; }
};

/// lambda1 * max(ray angle at the surface point, hook) * D_pos * D_dir, or +inf where the
/// candidate is occluded. `ref_poses[j]` is the camera of warps[j].
UnaryCosts unary_costs(std::span<const WarpedView> warps, std::span<const Pose> ref_poses, const Camera& target,
                       const EnergyWeights& weights);

struct PairwiseTerms {
    double e3 = 0.0;
    double e4 = 0.0;
    double e5 = 0.0;
};

/// Seam terms for 4-neighbours i, j (flat indices) taking labels a and b. Colour and depth
/// differences are truncated at tau_c / tau_d; a value missing in either candidate costs the
/// full truncation. Gradients are forward differences with a replicated border, taken as zero
/// where a sample is occluded. Zero when a == b.
PairwiseTerms pairwise_terms(std::size_t i, std::size_t j, std::size_t a, std::size_t b,
                             std::span<const WarpedView> warps, const EnergyWeights& weights);
double pairwise_cost(std::size_t i, std::size_t j, std::size_t a, std::size_t b, std::span<const WarpedView> warps,
                     const EnergyWeights& weights);

struct StitchProblem {
    int width = 0;
    int height = 0;
    std::size_t num_candidates = 0;
    Mrf mrf; ///< nodes = non-hole pixels in row-major order
    std::vector<std::ptrdiff_t> node_of_pixel; ///< -1 for holes
    std::vector<std::size_t> pixel_of_node;
    Mask hole; ///< 1 where every candidate is occluded
};

StitchProblem build_stitch_problem(std::span<const WarpedView> warps, std::span<const Pose> ref_poses,
                                   const Camera& target, const EnergyWeights& weights);

struct Labeling {
    LabelRaster candidate; ///< chosen candidate per pixel (0 on holes)
    Mask hole;
    double energy = 0.0;
    double lower_bound = 0.0;
    std::vector<double> bound_history;
};

Labeling trws_solve(const StitchProblem& problem, const TrwsOptions& options = {});

/// Energy of a pixel labeling recomputed from the unary and pairwise definitions.
double stitch_energy(const LabelRaster& candidate, const Mask& hole, std::span<const WarpedView> warps,
                     std::span<const Pose> ref_poses, const Camera& target, const EnergyWeights& weights);

/// Colour of the chosen candidate per pixel; black on holes.
ImageRaster compose_mosaic(const Labeling& labeling, std::span<const WarpedView> warps);

struct BlendOptions {
    /// Weight pulling non-hole pixels towards the mosaic; keeps regions without a fixed
    /// pixel well posed.
    double screen = 1e-4;
    double tolerance = 1e-10; ///< relative CG residual
    int max_iter = 20000;
};

/// Gradient-domain blend. Guidance differences come from the chosen candidates (averaged across
/// a seam over the candidates valid at both pixels, the mosaic difference if there is none) and
/// are zero on holes. Pixels labelled
/// `nearest_ref` on the boundary of their region are fixed to the mosaic; every other pixel is
/// solved per channel and the result clamped to [0,1].
ImageRaster poisson_blend(const ImageRaster& mosaic, const Labeling& labeling, std::span<const WarpedView> warps,
                          std::size_t nearest_ref, const BlendOptions& options = {});

struct StitchConfig {
    EnergyWeights weights;
    WarpConfig warp;
    TrwsOptions trws;
    BlendOptions blend;

    static StitchConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

inline constexpr std::uint16_t kNoSource = 0xFFFF;

struct SynthesizedView {
    ImageRaster image;
    DepthMap depth;
    LabelRaster provenance; ///< dataset index of the winning reference, kNoSource on holes
    Labeling labeling;
    std::vector<std::size_t> references; ///< dataset indices, candidate order
    std::vector<WarpedView> warps;
};

/// Throws std::invalid_argument for an empty dataset.
SynthesizedView synthesize_view(const Camera& target, std::span<const ViewSample> dataset,
                                const StitchConfig& config = {});

} // namespace aads
