#include "aads/pipeline.hpp"

#include "aads/config_util.hpp"
#include "aads/errors.hpp"
#include "aads/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

namespace aads {

namespace fs = std::filesystem;
using nlohmann::json;

io::PlyTable cloud_to_ply(const PointCloud& cloud)
{
    io::PlyTable t;
    t.properties = {{"x", io::PlyType::Float32},    {"y", io::PlyType::Float32},   {"z", io::PlyType::Float32},
                    {"red", io::PlyType::UInt8},    {"green", io::PlyType::UInt8}, {"blue", io::PlyType::UInt8},
                    {"class_id", io::PlyType::UInt16}};
    t.rows.reserve(cloud.size());
    for (const ScenePoint& p : cloud)
        t.rows.push_back({p.position.x(), p.position.y(), p.position.z(), double(io::to_byte(p.color.x())),
                          double(io::to_byte(p.color.y())), double(io::to_byte(p.color.z())), double(p.class_id)});
    return t;
}

PointCloud cloud_from_ply(const io::PlyTable& table)
{
    const int x = table.find("x"), y = table.find("y"), z = table.find("z");
    if (x < 0 || y < 0 || z < 0)
        throw ParseError("point cloud PLY needs x, y and z");
    const int r = table.find("red"), g = table.find("green"), b = table.find("blue");
    const int c = table.find("class_id");
    PointCloud cloud;
    cloud.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        ScenePoint p;
        p.position = Vec3(row[x], row[y], row[z]);
        if (r >= 0 && g >= 0 && b >= 0)
            p.color = Rgb(row[r], row[g], row[b]) / 255.0;
        if (c >= 0)
            p.class_id = static_cast<std::uint16_t>(row[c]);
        cloud.push_back(p);
    }
    return cloud;
}

SceneGeometry filter_classes(const SceneGeometry& scene, const std::set<std::uint16_t>& drop)
{
    SceneGeometry out;
    for (const ScenePoint& p : scene.points)
        if (!drop.contains(p.class_id))
            out.points.push_back(p);
    for (const Triangle& t : scene.triangles)
        if (!drop.contains(t.class_id))
            out.triangles.push_back(t);
    return out;
}

// Manifest --------------------------------------------------------------------------

namespace {

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string relative_to(const fs::path& p, const fs::path& base)
{
    if (p.empty())
        return {};
    return fs::path(p).lexically_proximate(base).generic_string();
}

std::string get_path(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key) || !j.at(key).is_string())
        throw ParseError(where + ": \"" + key + "\" must be a path string");
    return j.at(key).get<std::string>();
}

} // namespace

Manifest Manifest::from_json(const json& j, const fs::path& base)
{
    const std::string where = "manifest";
    config::check_keys(j, {"views", "scene_cloud", "lane_map", "trajectory_bank"}, where);
    if (!j.contains("views") || !j.at("views").is_array())
        throw ParseError(where + ": \"views\" must be an array");
    Manifest m;
    for (const auto& jv : j.at("views")) {
        config::check_keys(jv, {"image", "depth", "labels", "camera"}, where + " view");
        m.views.push_back({resolve(base, get_path(jv, "image", where)), resolve(base, get_path(jv, "depth", where)),
                           resolve(base, get_path(jv, "labels", where)), resolve(base, get_path(jv, "camera", where))});
    }
    if (j.contains("scene_cloud"))
        m.scene_cloud = resolve(base, get_path(j, "scene_cloud", where));
    if (j.contains("lane_map"))
        m.lane_map = resolve(base, get_path(j, "lane_map", where));
    if (j.contains("trajectory_bank"))
        m.trajectory_bank = resolve(base, get_path(j, "trajectory_bank", where));
    return m;
}

json Manifest::to_json(const fs::path& base) const
{
    json arr = json::array();
    for (const ViewFiles& v : views)
        arr.push_back({{"image", relative_to(v.image, base)},
                         {"depth", relative_to(v.depth, base)},
                         {"labels", relative_to(v.labels, base)},
                         {"camera", relative_to(v.camera, base)}});
    json j{{"views", arr}};
    if (!scene_cloud.empty())
        j["scene_cloud"] = relative_to(scene_cloud, base);
    if (!lane_map.empty())
        j["lane_map"] = relative_to(lane_map, base);
    if (!trajectory_bank.empty())
        j["trajectory_bank"] = relative_to(trajectory_bank, base);
    return j;
}

Manifest Manifest::read(const fs::path& path)
{
    return from_json(io::read_json(path), path.parent_path());
}

void Manifest::write(const fs::path& path) const
{
    io::write_json(path, to_json(path.parent_path()));
}

std::vector<ViewSample> load_views(const Manifest& manifest)
{
    if (manifest.views.empty())
        throw ParseError("manifest has no views");
    std::vector<ViewSample> out;
    for (const ViewFiles& f : manifest.views) {
        ViewSample v{io::read_image(f.image), io::read_drf(f.depth), io::read_png16(f.labels), io::read_camera(f.camera)};
        try {
            v.validate();
        } catch (const std::invalid_argument& e) {
            throw ParseError(f.image.string() + ": " + e.what());
        }
        if (!out.empty() && (v.camera.intrinsics.width() != out[0].camera.intrinsics.width() ||
                             v.camera.intrinsics.height() != out[0].camera.intrinsics.height()))
            throw ParseError(f.camera.string() + ": view size differs from the first view");
        out.push_back(std::move(v));
    }
    return out;
}

ViewFiles write_view(const fs::path& dir, const std::string& stem, const ViewSample& view)
{
    fs::create_directories(dir);
    ViewFiles f{dir / (stem + ".png"), dir / (stem + ".drf"), dir / (stem + "_labels.png"), dir / (stem + ".json")};
    io::write_png(f.image, view.image);
    io::write_drf(f.depth, view.depth);
    io::write_png16(f.labels, view.labels);
    io::write_json(f.camera, io::camera_to_json(view.camera));
    return f;
}

// Threads -----------------------------------------------------------------------------

std::size_t resolve_threads(std::size_t requested)
{
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("AADS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn)
{
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t count = std::min(std::max<std::size_t>(threads, 1), n);
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < count; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

// Config ------------------------------------------------------------------------------

CameraIntrinsics CameraRig::intrinsics() const
{
    return CameraIntrinsics(focal, focal, (width - 1) / 2.0, (height - 1) / 2.0, width, height);
}

namespace {

Vec3 vec3_field(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
        throw ParseError(where + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::vector<CameraPath> camera_paths(const json& j, const std::string& where)
{
    if (!j.is_array() || j.empty())
        throw ParseError(where + ": expected a non-empty array of {\"eye\",\"target\"}");
    std::vector<CameraPath> out;
    for (const auto& jc : j) {
        config::check_keys(jc, {"eye", "target"}, where);
        if (!jc.contains("eye") || !jc.contains("target"))
            throw ParseError(where + ": camera needs \"eye\" and \"target\"");
        out.push_back({vec3_field(jc.at("eye"), where + ".eye"), vec3_field(jc.at("target"), where + ".target")});
    }
    return out;
}

Camera path_camera(const CameraPath& c, const CameraRig& rig)
{
    return {rig.intrinsics(), Pose::look_at(c.eye, c.target, Vec3::UnitZ())};
}

} // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base)
{
    const std::string where = "pipeline config";
    config::check_keys(j,
                       {"seed", "threads", "scene", "manifest", "cameras", "references", "frames", "movable_classes",
                        "refine", "stitch", "traffic", "lidar"},
                       where);
    PipelineConfig c;
    config::read_opt(j, "seed", c.seed, where);
    config::read_opt(j, "threads", c.threads, where);

    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        if (s.is_string() && s == "demo")
            c.scene = demo_scene();
        else if (s.is_string())
            c.scene = SceneSpec::from_json(io::read_json(resolve(base, s.get<std::string>())));
        else
            c.scene = SceneSpec::from_json(s);
    }
    if (j.contains("manifest"))
        c.manifest = resolve(base, get_path(j, "manifest", where));
    if (c.scene.has_value() == !c.manifest.empty())
        throw ParseError(where + ": exactly one of \"scene\" and \"manifest\" is required");

    if (j.contains("cameras")) {
        const auto& jr = j.at("cameras");
        config::check_keys(jr, {"width", "height", "focal"}, "cameras");
        config::read_opt(jr, "width", c.rig.width, "cameras");
        config::read_opt(jr, "height", c.rig.height, "cameras");
        config::read_opt(jr, "focal", c.rig.focal, "cameras");
        if (c.rig.width < 1 || c.rig.height < 1 || !(c.rig.focal > 0.0))
            throw ParseError("cameras: width, height and focal must be positive");
    }
    if (j.contains("references"))
        c.references = camera_paths(j.at("references"), "references");
    else if (c.scene)
        throw ParseError(where + ": \"references\" is required with a synthetic scene");
    if (!j.contains("frames"))
        throw ParseError(where + ": \"frames\" is required");
    c.frames = camera_paths(j.at("frames"), "frames");
    if (j.contains("movable_classes"))
        c.movable = j.at("movable_classes").get<std::set<std::uint16_t>>();
    if (j.contains("refine"))
        c.refine = RefineConfig::from_json(j.at("refine"));
    if (j.contains("stitch"))
        c.stitch = StitchConfig::from_json(j.at("stitch"));

    const Manifest manifest = c.manifest.empty() ? Manifest{} : Manifest::read(c.manifest);
    if (j.contains("traffic")) {
        const auto& t = j.at("traffic");
        config::check_keys(t, {"enabled", "lane_map", "bank", "counts", "config", "steps_per_frame", "ground_z"},
                           "traffic");
        config::read_opt(t, "enabled", c.traffic_enabled, "traffic");
        if (t.contains("lane_map"))
            c.lane_map = resolve(base, get_path(t, "lane_map", "traffic"));
        if (t.contains("bank"))
            c.bank = resolve(base, get_path(t, "bank", "traffic"));
        if (t.contains("counts")) {
            c.counts.clear();
            for (const auto& item : t.at("counts").items()) {
                if (!item.value().is_number_integer() || item.value().get<std::int64_t>() < 0)
                    throw ParseError("traffic.counts: counts must be non-negative integers");
                c.counts[parse_agent_class(item.key())] = item.value().get<std::size_t>();
            }
        }
        if (t.contains("config"))
            c.traffic = TrafficConfig::from_json(t.at("config"));
        config::read_opt(t, "steps_per_frame", c.steps_per_frame, "traffic");
        config::read_opt(t, "ground_z", c.ground_z, "traffic");
    }
    if (c.lane_map.empty())
        c.lane_map = manifest.lane_map;
    if (c.bank.empty())
        c.bank = manifest.trajectory_bank;
    if (c.traffic_enabled && c.lane_map.empty())
        throw ParseError("traffic.lane_map: required when traffic is enabled");
    if (c.traffic_enabled && c.bank.empty())
        throw ParseError("traffic.bank: required when traffic is enabled");

    if (j.contains("lidar")) {
        const auto& l = j.at("lidar");
        config::check_keys(l, {"enabled", "model", "resolution", "format"}, "lidar");
        config::read_opt(l, "enabled", c.lidar_enabled, "lidar");
        if (l.contains("model"))
            c.lidar = BeamModel::from_json(l.at("model"));
        config::read_opt(l, "resolution", c.lidar_resolution, "lidar");
        if (c.lidar_resolution < 1)
            throw ParseError("lidar.resolution: must be positive");
        std::string format = "binary";
        config::read_opt(l, "format", format, "lidar");
        if (format != "binary" && format != "ascii")
            throw ParseError("lidar.format: expected \"binary\" or \"ascii\"");
        c.ply_format = format == "ascii" ? io::PlyFormat::Ascii : io::PlyFormat::BinaryLittleEndian;
    }
    if (c.lidar_enabled && c.manifest.empty() == false && manifest.scene_cloud.empty())
        throw ParseError("lidar: the manifest has no scene_cloud to scan");
    return c;
}

PipelineConfig PipelineConfig::read(const fs::path& path)
{
    return from_json(io::read_json(path), path.parent_path());
}

// Run ---------------------------------------------------------------------------------

namespace {

std::string stage_prefix(const char* stage, std::optional<std::size_t> frame)
{
    std::string p = std::string("stage ") + stage;
    if (frame)
        p += ", frame " + std::to_string(*frame);
    return p + ": ";
}

template <typename Fn>
auto run_stage(const char* stage, std::optional<std::size_t> frame, Fn&& fn)
{
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ParseError(stage_prefix(stage, frame) + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(stage_prefix(stage, frame) + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(stage_prefix(stage, frame) + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(stage_prefix(stage, frame) + e.what());
    }
}

std::string frame_stem(std::size_t f)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04zu", f);
    return buf;
}

} // namespace

RunResult run_pipeline(const PipelineConfig& config, const fs::path& out_dir)
{
    fs::create_directories(out_dir / "references");
    fs::create_directories(out_dir / "frames");
    const std::size_t threads = resolve_threads(config.threads);
    RunResult result;

    // Input views and static geometry.
    std::vector<ViewSample> views;
    SceneGeometry geometry;
    bool have_geometry = false;
    if (config.scene) {
        const SyntheticScene scene = run_stage("scene", std::nullopt, [&] { return make_synthetic_scene(*config.scene); });
        std::vector<std::optional<ViewSample>> rendered(config.references.size());
        parallel_for(rendered.size(), threads, [&](std::size_t i) {
            rendered[i] = scene.tracer.render_view(path_camera(config.references[i], config.rig));
        });
        for (auto& v : rendered)
            views.push_back(std::move(*v));
        geometry = scene.geometry;
        have_geometry = true;
    } else {
        const Manifest manifest = Manifest::read(config.manifest);
        views = run_stage("load", std::nullopt, [&] { return load_views(manifest); });
        if (!manifest.scene_cloud.empty()) {
            geometry.points = cloud_from_ply(io::read_ply(manifest.scene_cloud));
            have_geometry = true;
        }
    }
    const SceneGeometry static_geometry = filter_classes(geometry, config.movable);

    // remove -> refine, once per reference.
    std::vector<std::optional<ViewSample>> slots(views.size());
    parallel_for(views.size(), threads, [&](std::size_t i) {
        const RemovalResult removed =
            run_stage("remove", std::nullopt, [&] { return remove_moving_objects(views[i], config.movable); });
        ViewSample v = removed.view;
        v.image = run_stage("remove", std::nullopt, [&] {
            return diffusion_inpaint(removed.view.image, removed.holes, config.refine.laplace());
        });
        v.depth = run_stage("refine", std::nullopt, [&] {
            const DepthMap raw = static_geometry.points.empty() ? removed.view.depth
                                                                : render_point_depth(static_geometry.points, v.camera);
            return refine_depth(raw, v.image, config.refine);
        });
        slots[i] = std::move(v);
    });
    std::vector<ViewSample> cleaned;
    for (auto& v : slots)
        cleaned.push_back(std::move(*v));
    for (std::size_t i = 0; i < cleaned.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "ref_%02zu", i);
        write_view(out_dir / "references", stem, cleaned[i]);
    }

    // Traffic over the whole sequence.
    TrajectoryLog log;
    if (config.traffic_enabled) {
        log = run_stage("traffic-sim", std::nullopt, [&] {
            const LaneMap lanes = LaneMap::from_json(io::read_json(config.lane_map));
            const VelocityBank bank = load_velocity_bank(read_trajectory(config.bank));
            TrafficConfig tc = config.traffic;
            tc.seed = config.seed;
            const auto agents = init_agents(lanes, config.counts, tc, &bank);
            return simulate_traffic(agents, bank, lanes, tc, config.frames.size() * config.steps_per_frame);
        });
        write_trajectory(out_dir / "traffic.csv", log);
    }

    // Frames.
    std::vector<std::vector<std::string>> frame_diag(config.frames.size());
    parallel_for(config.frames.size(), threads, [&](std::size_t f) {
        const Camera cam = path_camera(config.frames[f], config.rig);
        const std::string stem = frame_stem(f);
        const fs::path dir = out_dir / "frames";
        const SynthesizedView view =
            run_stage("synth-view", f, [&] { return synthesize_view(cam, cleaned, config.stitch); });
        const auto agents =
            placements_from_log(log, static_cast<std::int64_t>(f * config.steps_per_frame), config.ground_z);
        const ComposedFrame frame = run_stage("compose", f, [&] {
            return compose_frame(view.image, view.depth, agents, cam, static_cast<std::int64_t>(f));
        });
        io::write_png(dir / (stem + ".png"), frame.image);
        io::write_drf(dir / (stem + "_depth.drf"), frame.depth);
        io::write_png16(dir / (stem + "_mask.png"), frame.instance_mask);
        io::write_json(dir / (stem + ".ann.json"), frame.annotation.to_json());
        frame_diag[f] = frame.diagnostics;

        if (config.lidar_enabled && have_geometry) {
            run_stage("lidar-sim", f, [&] {
                SceneGeometry scene = static_geometry;
                for (const AgentPlacement& a : agents) {
                    const auto tris = box_triangles(a.center, a.size, a.yaw, a.color, agent_label(a.cls));
                    scene.triangles.insert(scene.triangles.end(), tris.begin(), tris.end());
                }
                BeamModel model = config.lidar;
                model.rng_seed = config.seed ^ static_cast<std::uint64_t>(f);
                const CubeMapDepth cube =
                    render_cube_map(scene, Pose(Mat3::Identity(), cam.pose.center()), config.lidar_resolution);
                const LidarScan scan = cast_scan(model, cube, f);
                io::write_ply(dir / (stem + "_scan.ply"), scan_to_ply(scan), config.ply_format);
                return 0;
            });
        }
    });
    for (std::size_t f = 0; f < frame_diag.size(); ++f)
        for (const std::string& d : frame_diag[f])
            result.diagnostics.push_back("frame " + std::to_string(f) + ": " + d);

    // Content hashes of everything written.
    for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
        if (!entry.is_regular_file())
            continue;
        const std::string rel = entry.path().lexically_relative(out_dir).generic_string();
        if (rel == "manifest.json")
            continue;
        result.files.push_back({rel, io::sha256_file(entry.path())});
    }
    std::sort(result.files.begin(), result.files.end(),
              [](const OutputFile& a, const OutputFile& b) { return a.path < b.path; });
    json files = json::array();
    for (const OutputFile& f : result.files)
        files.push_back({{"path", f.path}, {"sha256", f.sha256}});
    io::write_json(out_dir / "manifest.json",
                   {{"seed", config.seed}, {"frames", config.frames.size()}, {"files", files},
                    {"diagnostics", result.diagnostics}});
    return result;
}

// Demo material ------------------------------------------------------------------------

LaneMap demo_lane_map()
{
    LaneMap map;
    for (const double y : {-4.5, -1.5, 1.5, 4.5}) {
        Lane l;
        l.centerline = {Vec2(-10, y), Vec2(38, y)};
        l.width = 3.0;
        l.direction = y < 0 ? 1 : -1;
        map.lanes.push_back(l);
    }
    return map;
}

TrajectoryLog demo_trajectory_bank(std::uint64_t seed, std::size_t agents, std::size_t frames)
{
    TrajectoryLog log;
    log.dt = 0.1;
    for (std::size_t a = 0; a < agents; ++a) {
        const double pick = rng::uniform({seed, a, 0});
        AgentClass cls = AgentClass::Car;
        double speed = 0.0;
        if (pick < 0.6) {
            speed = rng::uniform({seed, a, 1}) < 0.6 ? 6.0 + 1.0 * rng::normal({seed, a, 2})
                                                      : 10.0 + 1.5 * rng::normal({seed, a, 2});
        } else if (pick < 0.8) {
            cls = AgentClass::Cyclist;
            speed = 4.0 + 0.8 * rng::normal({seed, a, 2});
        } else {
            cls = AgentClass::Pedestrian;
            speed = 1.4 + 0.2 * rng::normal({seed, a, 2});
        }
        speed = std::clamp(speed, 0.0, agent_max_speed(cls));
        const double dir = rng::uniform({seed, a, 3}) < 0.5 ? 1.0 : -1.0;
        Vec2 p(100.0 * rng::uniform({seed, a, 4}), dir > 0 ? -3.0 : 3.0);
        for (std::size_t f = 0; f < frames; ++f) {
            const Vec2 v(dir * (speed + 0.1 * rng::normal({seed, a, 5, f})), 0.05 * rng::normal({seed, a, 6, f}));
            log.rows.push_back({static_cast<std::int64_t>(f), static_cast<std::uint32_t>(a), cls, p,
                                std::atan2(v.y(), v.x()), v});
            p += v * log.dt;
        }
    }
    return log;
}

json demo_pipeline_json(const std::string& lane_map, const std::string& bank)
{
    json refs = json::array();
    for (const double x : {0.0, 2.0, 4.0, 6.0})
        refs.push_back({{"eye", {x, 0.0, 1.6}}, {"target", {x + 20.0, 0.0, 1.0}}});
    json frames = json::array();
    for (const double x : {1.0, 3.0, 5.0})
        frames.push_back({{"eye", {x, 0.5, 1.6}}, {"target", {x + 20.0, 0.5, 1.0}}});
    return {{"seed", 7},
            {"scene", "demo"},
            {"cameras", {{"width", 160}, {"height", 120}, {"focal", 130.0}}},
            {"references", refs},
            {"frames", frames},
            {"traffic",
             {{"lane_map", lane_map},
              {"bank", bank},
              {"counts", {{"car", 4}, {"cyclist", 1}}},
              {"steps_per_frame", 5}}},
            {"lidar", {{"resolution", 256}, {"format", "binary"}}}};
}

} // namespace aads
