#pragma once

#include "aads/augment_pipeline.hpp"
#include "aads/depth_refine.hpp"
#include "aads/io.hpp"
#include "aads/lidar_sim.hpp"
#include "aads/stitch.hpp"
#include "aads/synthetic_scene.hpp"
#include "aads/traffic_sim.hpp"

#include "json.hpp"

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace aads {

// Point clouds ------------------------------------------------------------------

/// x y z (float32), red green blue (uint8), class_id (uint16).
io::PlyTable cloud_to_ply(const PointCloud& cloud);
/// Colour and class are optional; x y z are required (ParseError otherwise).
PointCloud cloud_from_ply(const io::PlyTable& table);

/// Scene geometry without the given classes.
SceneGeometry filter_classes(const SceneGeometry& scene, const std::set<std::uint16_t>& drop);

// Dataset manifests ---------------------------------------------------------------

struct ViewFiles {
    std::filesystem::path image;
    std::filesystem::path depth;
    std::filesystem::path labels;
    std::filesystem::path camera;
};

/// {"views":[{"image","depth","labels","camera"}],"scene_cloud","lane_map","trajectory_bank"};
/// relative paths resolve against the manifest's directory.
struct Manifest {
    std::vector<ViewFiles> views;
    std::filesystem::path scene_cloud;
    std::filesystem::path lane_map;
    std::filesystem::path trajectory_bank;

    static Manifest from_json(const nlohmann::json& j, const std::filesystem::path& base);
    nlohmann::json to_json(const std::filesystem::path& base) const;
    static Manifest read(const std::filesystem::path& path);
    void write(const std::filesystem::path& path) const;
};

/// Throws ParseError when a file is missing or malformed, or the views disagree in size.
std::vector<ViewSample> load_views(const Manifest& manifest);
/// Writes <stem>.png, <stem>.drf, <stem>_labels.png and <stem>.json into `dir`.
ViewFiles write_view(const std::filesystem::path& dir, const std::string& stem, const ViewSample& view);

// Threads -----------------------------------------------------------------------------

/// Explicit request if positive, else AADS_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t resolve_threads(std::size_t requested);

/// Runs fn(0..n-1) on up to `threads` workers. When several calls throw, the exception of
/// the lowest index is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// Pipeline --------------------------------------------------------------------------

struct CameraRig {
    int width = 160;
    int height = 120;
    double focal = 130.0;

    CameraIntrinsics intrinsics() const;
};

struct CameraPath {
    Vec3 eye;
    Vec3 target;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    /// Either a synthetic scene (references are ray traced) or a dataset manifest.
    std::optional<SceneSpec> scene;
    std::filesystem::path manifest;
    CameraRig rig;
    std::vector<CameraPath> references;
    std::vector<CameraPath> frames;
    std::set<std::uint16_t> movable = default_movable_classes();
    RefineConfig refine;
    StitchConfig stitch;

    bool traffic_enabled = true;
    std::filesystem::path lane_map;
    std::filesystem::path bank;
    std::map<AgentClass, std::size_t> counts{{AgentClass::Car, 4}};
    TrafficConfig traffic;
    std::size_t steps_per_frame = 5;
    double ground_z = 0.0;

    bool lidar_enabled = true;
    BeamModel lidar = BeamModel::hdl64();
    int lidar_resolution = 256;
    io::PlyFormat ply_format = io::PlyFormat::BinaryLittleEndian;

    /// Relative paths resolve against `base`. Throws ParseError naming the offending field.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base);
    static PipelineConfig read(const std::filesystem::path& path);
};

struct OutputFile {
    std::string path; ///< relative to the output directory
    std::string sha256;
};

struct RunResult {
    std::vector<OutputFile> files; ///< sorted by path
    std::vector<std::string> diagnostics;
};

/// remove -> refine (references) -> traffic -> per frame: synthesize -> compose -> lidar.
/// Frames run in parallel; frame f uses seed ^ f. Writes every artifact plus manifest.json
/// (relative paths and SHA-256) into `out_dir`. A failing stage throws the original error
/// type with the stage name and frame id prefixed.
RunResult run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir);

// Demo material -----------------------------------------------------------------------

/// Four lanes along the demo street, two per direction.
LaneMap demo_lane_map();
/// Constant-velocity tracks with jitter: cars from a two-mode speed mixture, cyclists and
/// pedestrians from single modes; `agents` tracks of `frames` frames each per class mix.
TrajectoryLog demo_trajectory_bank(std::uint64_t seed, std::size_t agents = 60, std::size_t frames = 20);
/// Demo pipeline config as JSON with paths relative to its own directory.
nlohmann::json demo_pipeline_json(const std::string& lane_map, const std::string& bank);

} // namespace aads
