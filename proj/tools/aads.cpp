// aads: command-line front end for the augmentation toolkit.

#include "aads/augment_pipeline.hpp"
#include "aads/depth_refine.hpp"
#include "aads/errors.hpp"
#include "aads/io.hpp"
#include "aads/lidar_sim.hpp"
#include "aads/pipeline.hpp"
#include "aads/stitch.hpp"
#include "aads/synthetic_scene.hpp"
#include "aads/traffic_sim.hpp"
#include "aads/view_synth.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace aads;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    std::string config;
};

json config_or_empty(const Globals& g)
{
    return g.config.empty() ? json::object() : io::read_json(g.config);
}

std::map<AgentClass, std::size_t> parse_counts(const std::string& text)
{
    std::map<AgentClass, std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--counts: expected class=n, got \"" + item + "\"");
        std::size_t used = 0;
        const std::string num = item.substr(eq + 1);
        unsigned long n = 0;
        try {
            n = std::stoul(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != num.size())
            throw std::invalid_argument("--counts: bad count in \"" + item + "\"");
        out[parse_agent_class(item.substr(0, eq))] += n;
    }
    if (out.empty())
        throw std::invalid_argument("--counts: no agents requested");
    return out;
}

SceneGeometry load_scene(const std::string& arg)
{
    if (arg == "demo")
        return make_synthetic_scene(demo_scene()).geometry;
    const fs::path p(arg);
    if (p.extension() == ".ply") {
        SceneGeometry g;
        g.points = cloud_from_ply(io::read_ply(p));
        return g;
    }
    return make_synthetic_scene(SceneSpec::from_json(io::read_json(p))).geometry;
}

std::vector<Pose> load_poses(const fs::path& path)
{
    const json j = io::read_json(path);
    const json& arr = j.is_object() && j.contains("poses") ? j.at("poses") : j;
    if (!arr.is_array() || arr.empty())
        throw ParseError(path.string() + ": expected a non-empty pose array or {\"poses\": [...]}");
    std::vector<Pose> out;
    for (const auto& jp : arr)
        out.push_back(io::pose_from_json(jp));
    return out;
}

// Two-series bar chart of histograms: simulation in red, reference in blue.
void write_histogram_plot(const fs::path& path, const std::vector<double>& sim, const std::vector<double>& ref)
{
    const int bar = 8, h = 200;
    const int w = static_cast<int>(sim.size()) * bar * 2 + 20;
    ImageRaster img(w, h + 20, Rgb::Ones());
    double top = 1e-12;
    for (std::size_t i = 0; i < sim.size(); ++i)
        top = std::max({top, sim[i], ref[i]});
    for (std::size_t i = 0; i < sim.size(); ++i) {
        const int x0 = 10 + static_cast<int>(i) * bar * 2;
        const int hs = static_cast<int>(sim[i] / top * h);
        const int hr = static_cast<int>(ref[i] / top * h);
        for (int x = 0; x < bar - 1; ++x) {
            for (int y = 0; y < hs; ++y)
                img(x0 + x, h + 10 - y) = Rgb(0.85, 0.2, 0.15);
            for (int y = 0; y < hr; ++y)
                img(x0 + bar + x, h + 10 - y) = Rgb(0.2, 0.35, 0.85);
        }
    }
    io::write_bytes(path, io::encode_ppm(img));
}

int cmd_refine_depth(const Globals& g, const std::string& cloud, const std::string& view, const std::string& guide,
                     const std::string& out)
{
    const RefineConfig cfg = RefineConfig::from_json(config_or_empty(g));
    const Camera cam = io::read_camera(view);
    const DepthMap raw = render_point_depth(cloud_from_ply(io::read_ply(cloud)), cam);
    const ImageRaster guide_image = guide.empty()
                                        ? ImageRaster(cam.intrinsics.width(), cam.intrinsics.height(), Rgb::Constant(0.5))
                                        : io::read_image(guide);
    io::write_drf(out, refine_depth(raw, guide_image, cfg));
    return 0;
}

int cmd_warp(const Globals& g, const std::string& refs, const std::string& target, const std::string& out_dir)
{
    const WarpConfig cfg = WarpConfig::from_json(config_or_empty(g));
    const std::vector<ViewSample> views = load_views(Manifest::read(refs));
    const Camera cam = io::read_camera(target);
    const auto chosen = select_references(cam.pose, views, cfg.reference_count, cfg.angle_weight);
    fs::create_directories(out_dir);
    parallel_for(chosen.size(), resolve_threads(g.threads), [&](std::size_t k) {
        const std::size_t idx = chosen[k];
        const WarpedView w = warp_reference(views[idx], idx, cam, cfg);
        char stem[48];
        std::snprintf(stem, sizeof stem, "warp_%02zu_ref%03zu", k, idx);
        const fs::path base = fs::path(out_dir) / stem;
        io::write_png(base.string() + ".png", w.color);
        io::write_drf(base.string() + ".drf", w.depth_proxy);
        io::write_mask_png(base.string() + "_mask.png", w.occlusion);
    });
    return 0;
}

int cmd_synth_view(const Globals& g, const std::string& dataset, const std::string& target, const std::string& weights,
                   const std::string& out, const std::string& out_depth, const std::string& out_src)
{
    StitchConfig cfg = StitchConfig::from_json(config_or_empty(g));
    if (!weights.empty())
        cfg.weights = EnergyWeights::from_json(io::read_json(weights));
    const std::vector<ViewSample> views = load_views(Manifest::read(dataset));
    const SynthesizedView v = synthesize_view(io::read_camera(target), views, cfg);
    io::write_png(out, v.image);
    if (!out_depth.empty())
        io::write_drf(out_depth, v.depth);
    if (!out_src.empty())
        io::write_png16(out_src, v.provenance);
    return 0;
}

int cmd_lidar_sim(const Globals& g, const std::string& scene, const std::string& traj, const std::string& model_path,
                  const std::string& out_dir, int resolution, bool ascii)
{
    BeamModel model = model_path.empty() ? BeamModel::hdl64() : BeamModel::from_json(io::read_json(model_path));
    if (g.seed)
        model.rng_seed = *g.seed;
    const SceneGeometry geometry = load_scene(scene);
    const std::vector<Pose> poses = load_poses(traj);
    fs::create_directories(out_dir);
    parallel_for(poses.size(), resolve_threads(g.threads), [&](std::size_t i) {
        const CubeMapDepth cube = render_cube_map(geometry, poses[i], resolution);
        const LidarScan scan = cast_scan(model, cube, i);
        char name[32];
        std::snprintf(name, sizeof name, "scan_%04zu.ply", i);
        io::write_ply(fs::path(out_dir) / name, scan_to_ply(scan),
                      ascii ? io::PlyFormat::Ascii : io::PlyFormat::BinaryLittleEndian);
    });
    return 0;
}

int cmd_traffic_sim(const Globals& g, const std::string& lanes_path, const std::string& bank_path,
                    const std::string& counts, std::size_t steps, const std::string& out)
{
    TrafficConfig cfg = TrafficConfig::from_json(config_or_empty(g));
    if (g.seed)
        cfg.seed = *g.seed;
    const LaneMap lanes = LaneMap::from_json(io::read_json(lanes_path));
    const TrajectoryLog real = read_trajectory(bank_path);
    const VelocityBank bank = load_velocity_bank(real);
    const auto agents = init_agents(lanes, parse_counts(counts), cfg, &bank);
    TrajectoryLog log = simulate_traffic(agents, bank, lanes, cfg, steps);
    write_trajectory(out, log);
    return 0;
}

int cmd_eval_dist(const std::string& traj, const std::string& ref, std::size_t bins, const std::string& out,
                  const std::string& plot)
{
    if (bins == 0)
        throw std::invalid_argument("--bins must be positive");
    const TrajectoryLog sim = read_trajectory(traj);
    const auto sim_speed = speed_samples(sim);
    const auto ref_speed = speed_samples(load_velocity_bank(read_trajectory(ref)));
    double vmax = 0.0;
    for (double v : sim_speed)
        vmax = std::max(vmax, v);
    for (double v : ref_speed)
        vmax = std::max(vmax, v);
    const auto hs = histogram(sim_speed, bins, vmax);
    const auto hr = histogram(ref_speed, bins, vmax);
    const Distributions d = eval_distributions(sim, bins);
    const json result{{"bins", bins},
                      {"speed_max", vmax},
                      {"speed_sim", hs},
                      {"speed_ref", hr},
                      {"speed_l1", l1_distance(hs, hr)},
                      {"min_distance", d.min_distance},
                      {"distance_max", d.distance_max},
                      {"warnings", d.warnings}};
    io::write_json(out, result);
    for (const std::string& w : d.warnings)
        std::cerr << "warning: " << w << '\n';
    if (!plot.empty())
        write_histogram_plot(plot, hs, hr);
    return 0;
}

int cmd_compose(const std::string& bg, const std::string& bg_depth, const std::string& agents, const std::string& cam,
                const std::string& out, const std::string& ann, const std::string& mask)
{
    const auto placements = placements_from_json(io::read_json(agents));
    const json aj = io::read_json(agents);
    std::int64_t frame = 0;
    if (aj.contains("frame"))
        frame = aj.at("frame").get<std::int64_t>();
    const ComposedFrame f =
        compose_frame(io::read_image(bg), io::read_drf(bg_depth), placements, io::read_camera(cam), frame);
    for (const std::string& d : f.diagnostics)
        std::cerr << "warning: " << d << '\n';
    io::write_png(out, f.image);
    io::write_json(ann, f.annotation.to_json());
    if (!mask.empty())
        io::write_png16(mask, f.instance_mask);
    return 0;
}

int cmd_run(const Globals& g, const std::string& out_dir)
{
    if (g.config.empty())
        throw std::invalid_argument("run needs --config");
    PipelineConfig cfg = PipelineConfig::read(g.config);
    if (g.seed)
        cfg.seed = *g.seed;
    if (g.threads > 0)
        cfg.threads = g.threads;
    const RunResult r = run_pipeline(cfg, out_dir);
    for (const std::string& d : r.diagnostics)
        std::cerr << "warning: " << d << '\n';
    std::cout << r.files.size() << " files written to " << out_dir << '\n';
    return 0;
}

int cmd_make_scene(const Globals& g, const std::string& spec_path, bool demo, const std::vector<std::string>& views,
                   const std::string& out_dir)
{
    if (demo == !spec_path.empty())
        throw std::invalid_argument("make-scene needs exactly one of --spec and --demo");
    const SceneSpec spec = demo ? demo_scene() : SceneSpec::from_json(io::read_json(spec_path));
    const SyntheticScene scene = make_synthetic_scene(spec);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    io::write_json(dir / "scene.json", spec.to_json());
    io::write_ply(dir / "scene.ply", cloud_to_ply(scene.geometry.points), io::PlyFormat::BinaryLittleEndian);

    std::vector<Camera> cams;
    for (const std::string& v : views)
        cams.push_back(io::read_camera(v));
    if (demo) {
        const json pipeline = demo_pipeline_json("lanes.json", "bank.csv");
        io::write_json(dir / "lanes.json", demo_lane_map().to_json());
        write_trajectory(dir / "bank.csv", demo_trajectory_bank(g.seed.value_or(7)));
        json p = pipeline;
        p["scene"] = "scene.json";
        io::write_json(dir / "pipeline.json", p);
        const CameraRig rig;
        if (cams.empty())
            for (const auto& r : pipeline.at("references"))
                cams.push_back({rig.intrinsics(),
                                Pose::look_at(Vec3(r["eye"][0], r["eye"][1], r["eye"][2]),
                                              Vec3(r["target"][0], r["target"][1], r["target"][2]), Vec3::UnitZ())});
    }
    Manifest manifest;
    manifest.scene_cloud = dir / "scene.ply";
    if (demo) {
        manifest.lane_map = dir / "lanes.json";
        manifest.trajectory_bank = dir / "bank.csv";
    }
    for (std::size_t i = 0; i < cams.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "view_%02zu", i);
        manifest.views.push_back(write_view(dir / "views", stem, scene.tracer.render_view(cams[i])));
    }
    if (!manifest.views.empty())
        manifest.write(dir / "manifest.json");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulation toolkit for augmented driving data: depth refinement, view synthesis, traffic, "
                 "LiDAR and annotated composition."};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--threads", g.threads, "Worker threads (default: AADS_THREADS or all cores)");
    app.add_option("--config", g.config, "JSON configuration for the subcommand");

    std::function<int()> action;

    auto* refine = app.add_subcommand("refine-depth", "Render and refine depth from a point cloud");
    std::string r_cloud, r_view, r_guide, r_out;
    refine->add_option("--cloud", r_cloud, "Point cloud PLY")->required();
    refine->add_option("--view", r_view, "Camera JSON")->required();
    refine->add_option("--guide", r_guide, "Guide image (default: flat grey)");
    refine->add_option("--out", r_out, "Output DRF1 depth")->required();
    refine->callback([&] { action = [&] { return cmd_refine_depth(g, r_cloud, r_view, r_guide, r_out); }; });

    auto* warp = app.add_subcommand("warp", "Warp the nearest references into a target view");
    std::string w_refs, w_target, w_out;
    warp->add_option("--refs", w_refs, "Dataset manifest")->required();
    warp->add_option("--target", w_target, "Target camera JSON")->required();
    warp->add_option("--out-dir", w_out, "Output directory")->required();
    warp->callback([&] { action = [&] { return cmd_warp(g, w_refs, w_target, w_out); }; });

    auto* synth = app.add_subcommand("synth-view", "Synthesize a novel view from a dataset");
    std::string s_dataset, s_target, s_weights, s_out, s_depth, s_src;
    synth->add_option("--dataset", s_dataset, "Dataset manifest")->required();
    synth->add_option("--target", s_target, "Target camera JSON")->required();
    synth->add_option("--weights", s_weights, "Energy weights JSON");
    synth->add_option("--out", s_out, "Output image")->required();
    synth->add_option("--out-depth", s_depth, "Output DRF1 depth");
    synth->add_option("--out-src", s_src, "Output source-index PNG (16-bit)");
    synth->callback([&] { action = [&] { return cmd_synth_view(g, s_dataset, s_target, s_weights, s_out, s_depth, s_src); }; });

    auto* lidar = app.add_subcommand("lidar-sim", "Simulate LiDAR scans along a trajectory");
    std::string l_scene, l_traj, l_model, l_out;
    int l_res = 1024;
    bool l_ascii = false;
    lidar->add_option("--scene", l_scene, "Scene JSON, point cloud PLY, or 'demo'")->required();
    lidar->add_option("--traj", l_traj, "Sensor poses JSON")->required();
    lidar->add_option("--model", l_model, "Beam model JSON (default: 64 beams)");
    lidar->add_option("--out-dir", l_out, "Output directory")->required();
    lidar->add_option("--resolution", l_res, "Cube map face size")->check(CLI::PositiveNumber);
    lidar->add_flag("--ascii", l_ascii, "Write ASCII PLY");
    lidar->callback([&] { action = [&] { return cmd_lidar_sim(g, l_scene, l_traj, l_model, l_out, l_res, l_ascii); }; });

    auto* traffic = app.add_subcommand("traffic-sim", "Simulate traffic from a velocity bank");
    std::string t_lanes, t_bank, t_counts, t_out;
    std::size_t t_steps = 600;
    traffic->add_option("--lanes", t_lanes, "Lane map JSON")->required();
    traffic->add_option("--bank", t_bank, "Trajectory CSV to draw velocities from")->required();
    traffic->add_option("--counts", t_counts, "Agents per class, e.g. car=20,ped=5")->required();
    traffic->add_option("--steps", t_steps, "Simulation steps");
    traffic->add_option("--out", t_out, "Output trajectory CSV")->required();
    traffic->callback([&] { action = [&] { return cmd_traffic_sim(g, t_lanes, t_bank, t_counts, t_steps, t_out); }; });

    auto* eval = app.add_subcommand("eval-dist", "Compare speed and spacing distributions");
    std::string e_traj, e_ref, e_out, e_plot;
    std::size_t e_bins = 30;
    eval->add_option("--traj", e_traj, "Simulated trajectory CSV")->required();
    eval->add_option("--ref", e_ref, "Reference trajectory CSV")->required();
    eval->add_option("--bins", e_bins, "Histogram bins");
    eval->add_option("--out", e_out, "Output JSON")->required();
    eval->add_option("--plot", e_plot, "Bar chart PPM");
    eval->callback([&] { action = [&] { return cmd_eval_dist(e_traj, e_ref, e_bins, e_out, e_plot); }; });

    auto* compose = app.add_subcommand("compose", "Composite agents into a background and annotate");
    std::string c_bg, c_depth, c_agents, c_cam, c_out, c_ann, c_mask;
    compose->add_option("--bg", c_bg, "Background image")->required();
    compose->add_option("--bg-depth", c_depth, "Background DRF1 depth")->required();
    compose->add_option("--agents", c_agents, "Agent placements JSON")->required();
    compose->add_option("--cam", c_cam, "Camera JSON")->required();
    compose->add_option("--out", c_out, "Output image")->required();
    compose->add_option("--ann", c_ann, "Output annotation JSON")->required();
    compose->add_option("--mask", c_mask, "Output instance mask PNG (16-bit)");
    compose->callback([&] { action = [&] { return cmd_compose(c_bg, c_depth, c_agents, c_cam, c_out, c_ann, c_mask); }; });

    auto* run = app.add_subcommand("run", "Run the full pipeline from a config");
    std::string p_out;
    run->add_option("--out-dir", p_out, "Artifact directory")->required();
    run->callback([&] { action = [&] { return cmd_run(g, p_out); }; });

    auto* make = app.add_subcommand("make-scene", "Write a synthetic scene, its point cloud and rendered views");
    std::string m_spec, m_out;
    bool m_demo = false;
    std::vector<std::string> m_views;
    make->add_option("--spec", m_spec, "Primitive list JSON");
    make->add_flag("--demo", m_demo, "Use the bundled street scene and write a runnable pipeline config");
    make->add_option("--view", m_views, "Camera JSON to render (repeatable)");
    make->add_option("--out-dir", m_out, "Output directory")->required();
    make->callback([&] { action = [&] { return cmd_make_scene(g, m_spec, m_demo, m_views, m_out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        return action ? action() : 1;
    } catch (const ParseError& e) {
        std::cerr << "aads: input error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "aads: numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "aads: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "aads: " << e.what() << '\n';
        return 1;
    }
}
