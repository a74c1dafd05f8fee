#include "aads/augment_pipeline.hpp"

#include "aads/config_util.hpp"
#include "aads/errors.hpp"
#include "aads/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace aads {

std::set<std::uint16_t> default_movable_classes()
{
    return {label::kCar, label::kCyclist, label::kPedestrian, label::kTruck};
}

RemovalResult remove_moving_objects(const ViewSample& view, const std::set<std::uint16_t>& movable)
{
    if (view.labels.empty())
        throw std::invalid_argument("remove_moving_objects: view has no labels");
    view.validate();
    RemovalResult out{view, Mask(view.labels.width(), view.labels.height(), 0), 0};
    for (std::size_t i = 0; i < view.labels.size(); ++i) {
        if (!movable.contains(view.labels[i]))
            continue;
        out.holes[i] = 1;
        out.view.image[i] = Rgb::Zero();
        out.view.depth[i] = kInvalidDepth;
        out.view.labels[i] = label::kUnknown;
        ++out.hole_count;
    }
    return out;
}

ImageRaster diffusion_inpaint(const ImageRaster& image, const Mask& mask, const LaplaceOptions& options)
{
    if (!image.same_shape(mask))
        throw std::invalid_argument("diffusion_inpaint: mask size differs from image");
    ImageRaster out = image;
    const auto masked = static_cast<std::size_t>(std::count_if(mask.values().begin(), mask.values().end(),
                                                               [](std::uint8_t m) { return m != 0; }));
    if (masked == 0)
        return out;
    if (masked == mask.size()) {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = Rgb::Constant(0.5);
        return out;
    }
    Raster<double> channel(image.width(), image.height());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < image.size(); ++i)
            channel[i] = image[i][c];
        solve_laplace(channel, mask, options);
        for (std::size_t i = 0; i < image.size(); ++i)
            if (mask[i])
                out[i][c] = channel[i];
    }
    return out;
}

Vec3 default_agent_size(AgentClass cls)
{
    switch (cls) {
    case AgentClass::Car: return {4.5, 1.8, 1.5};
    case AgentClass::Cyclist: return {1.8, 0.6, 1.7};
    case AgentClass::Pedestrian: return {0.6, 0.6, 1.8};
    }
    return {4.5, 1.8, 1.5};
}

namespace {

Rgb default_agent_color(AgentClass cls)
{
    switch (cls) {
    case AgentClass::Car: return {0.8, 0.1, 0.1};
    case AgentClass::Cyclist: return {0.1, 0.3, 0.85};
    case AgentClass::Pedestrian: return {0.9, 0.75, 0.1};
    }
    return {0.8, 0.1, 0.1};
}

Vec3 json_vec3(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
        throw ParseError(where + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json vec3_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

} // namespace

std::vector<AgentPlacement> placements_from_log(const TrajectoryLog& log, std::int64_t frame, double ground_z)
{
    std::vector<AgentPlacement> out;
    for (const TrajectoryRow& r : log.rows) {
        if (r.frame != frame)
            continue;
        AgentPlacement a;
        a.cls = r.cls;
        a.size = default_agent_size(r.cls);
        a.center = Vec3(r.position.x(), r.position.y(), ground_z + a.size.z() / 2.0);
        a.yaw = r.heading;
        a.color = default_agent_color(r.cls);
        out.push_back(a);
    }
    return out;
}

std::vector<AgentPlacement> placements_from_json(const nlohmann::json& j)
{
    const std::string where = "agents";
    config::check_keys(j, {"frame", "agents"}, where);
    if (!j.contains("agents") || !j.at("agents").is_array())
        throw ParseError(where + ": \"agents\" must be an array");
    std::vector<AgentPlacement> out;
    for (const auto& ja : j.at("agents")) {
        config::check_keys(ja, {"class", "center", "size", "yaw", "color"}, where);
        if (!ja.contains("class") || !ja.at("class").is_string())
            throw ParseError(where + ": agent without a class name");
        AgentPlacement a;
        a.cls = parse_agent_class(ja.at("class").get<std::string>());
        a.size = default_agent_size(a.cls);
        a.color = default_agent_color(a.cls);
        if (!ja.contains("center"))
            throw ParseError(where + ": agent without a center");
        a.center = json_vec3(ja.at("center"), where + " center");
        if (ja.contains("size"))
            a.size = json_vec3(ja.at("size"), where + " size");
        if (ja.contains("color"))
            a.color = json_vec3(ja.at("color"), where + " color");
        config::read_opt(ja, "yaw", a.yaw, where);
        out.push_back(a);
    }
    return out;
}

nlohmann::json placements_to_json(std::span<const AgentPlacement> agents)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const AgentPlacement& a : agents)
        arr.push_back({{"class", agent_class_name(a.cls)},
                       {"center", vec3_json(a.center)},
                       {"size", vec3_json(a.size)},
                       {"yaw", a.yaw},
                       {"color", vec3_json(a.color)}});
    return {{"agents", arr}};
}

nlohmann::json Annotation::to_json() const
{
    nlohmann::json objs = nlohmann::json::array();
    for (const ObjectAnnotation& o : objects)
        objs.push_back({{"class", agent_class_name(o.cls)},
                        {"box2d", {o.box2d[0], o.box2d[1], o.box2d[2], o.box2d[3]}},
                        {"box3d", {{"center", vec3_json(o.center)}, {"size", vec3_json(o.size)}, {"yaw", o.yaw}}},
                        {"mask_id", o.mask_id},
                        {"pixels", o.pixel_count}});
    return {{"frame", frame}, {"objects", objs}};
}

Annotation Annotation::from_json(const nlohmann::json& j)
{
    const std::string where = "annotation";
    config::check_keys(j, {"frame", "objects"}, where);
    Annotation a;
    config::read_opt(j, "frame", a.frame, where);
    if (!j.contains("objects") || !j.at("objects").is_array())
        throw ParseError(where + ": \"objects\" must be an array");
    for (const auto& jo : j.at("objects")) {
        config::check_keys(jo, {"class", "box2d", "box3d", "mask_id", "pixels"}, where);
        ObjectAnnotation o;
        try {
            o.cls = parse_agent_class(jo.at("class").get<std::string>());
            const auto& b = jo.at("box2d");
            if (!b.is_array() || b.size() != 4)
                throw ParseError(where + ": box2d must have 4 numbers");
            for (std::size_t k = 0; k < 4; ++k)
                o.box2d[k] = b[k].get<double>();
            const auto& b3 = jo.at("box3d");
            config::check_keys(b3, {"center", "size", "yaw"}, where + " box3d");
            o.center = json_vec3(b3.at("center"), where);
            o.size = json_vec3(b3.at("size"), where);
            o.yaw = b3.at("yaw").get<double>();
            o.mask_id = jo.at("mask_id").get<std::uint16_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        config::read_opt(jo, "pixels", o.pixel_count, where);
        a.objects.push_back(o);
    }
    return a;
}

std::optional<std::array<double, 4>> projected_box_bounds(const Vec3& center, const Vec3& size, double yaw,
                                                          const Camera& camera)
{
    const auto corners = box_corners(center, size, yaw);
    const CameraIntrinsics& in = camera.intrinsics;
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    auto extend = [&](const Vec2& p) {
        x0 = std::min(x0, p.x());
        y0 = std::min(y0, p.y());
        x1 = std::max(x1, p.x());
        y1 = std::max(y1, p.y());
    };
    std::array<Vec3, 8> cam;
    bool any = false;
    for (std::size_t i = 0; i < 8; ++i) {
        cam[i] = camera.pose.to_camera(corners[i]);
        if (cam[i].z() < kNearPlane)
            continue;
        if (const auto pr = project_unclipped(corners[i], in, camera.pose)) {
            extend(pr->pixel);
            any = true;
        }
    }
    if (!any)
        return std::nullopt;
    // Edges of the box join corners whose indices differ in exactly one bit.
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t bit = 1; bit < 8; bit <<= 1) {
            const std::size_t j = i ^ bit;
            if (j < i || (cam[i].z() >= kNearPlane) == (cam[j].z() >= kNearPlane))
                continue;
            const double t = (kNearPlane - cam[i].z()) / (cam[j].z() - cam[i].z());
            const Vec3 p = cam[i] + t * (cam[j] - cam[i]);
            extend(Vec2(in.fx() * p.x() / p.z() + in.cx(), in.fy() * p.y() / p.z() + in.cy()));
        }
    }
    x0 = std::max(x0, -0.5);
    y0 = std::max(y0, -0.5);
    x1 = std::min(x1, in.width() - 0.5);
    y1 = std::min(y1, in.height() - 0.5);
    if (x0 > x1 || y0 > y1)
        return std::nullopt;
    return std::array<double, 4>{x0, y0, x1, y1};
}

ComposedFrame compose_frame(const ImageRaster& background, const DepthMap& background_depth,
                            std::span<const AgentPlacement> agents, const Camera& camera, std::int64_t frame,
                            const ComposeOptions& options)
{
    const int w = camera.intrinsics.width();
    const int h = camera.intrinsics.height();
    if (background.width() != w || background.height() != h || !background.same_shape(background_depth))
        throw std::invalid_argument("compose_frame: background size differs from the camera raster");
    if (agents.size() >= 65535)
        throw std::invalid_argument("compose_frame: too many agents for 16-bit instance ids");

    ComposedFrame out{background, background_depth, LabelRaster(w, h, 0), LabelRaster(w, h, 0), {frame, {}}, {}};
    Raster<int> owner(w, h, -1);
    DepthMap zbuf(w, h, std::numeric_limits<double>::infinity());
    const Vec3 light = options.light.normalized();

    for (std::size_t i = 0; i < agents.size(); ++i) {
        const AgentPlacement& a = agents[i];
        if (!a.center.allFinite() || !a.size.allFinite() || !std::isfinite(a.yaw) || (a.size.array() <= 0.0).any()) {
            out.diagnostics.push_back("agent " + std::to_string(i) + ": degenerate box skipped");
            continue;
        }
        const auto tris = box_triangles(a.center, a.size, a.yaw, a.color, agent_label(a.cls));
        for (const Triangle& t : tris) {
            const Rgb shaded = (t.color * (0.6 + 0.4 * std::abs(t.normal().dot(light)))).cwiseMax(0.0).cwiseMin(1.0);
            rasterize_triangle(t.vertices, camera.intrinsics, camera.pose, [&](int x, int y, double z) {
                if (z >= zbuf(x, y))
                    return;
                const double bg = background_depth(x, y);
                if (is_valid_depth(bg) && z >= bg)
                    return;
                zbuf(x, y) = z;
                owner(x, y) = static_cast<int>(i);
                out.image(x, y) = shaded;
                out.depth(x, y) = z;
                out.labels(x, y) = t.class_id;
            });
        }
    }

    std::vector<std::size_t> counts(agents.size(), 0);
    for (std::size_t p = 0; p < owner.size(); ++p)
        if (owner[p] >= 0)
            ++counts[static_cast<std::size_t>(owner[p])];

    std::vector<bool> annotated(agents.size(), false);
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (counts[i] == 0)
            continue;
        const AgentPlacement& a = agents[i];
        const auto box = projected_box_bounds(a.center, a.size, a.yaw, camera);
        if (!box || counts[i] < options.min_mask_pixels) {
            out.diagnostics.push_back("agent " + std::to_string(i) + ": " + std::to_string(counts[i]) +
                                      " visible pixels, not annotated");
            continue;
        }
        annotated[i] = true;
        out.annotation.objects.push_back(
            {a.cls, *box, a.center, a.size, a.yaw, static_cast<std::uint16_t>(i + 1), counts[i]});
    }
    for (std::size_t p = 0; p < owner.size(); ++p)
        if (owner[p] >= 0 && annotated[static_cast<std::size_t>(owner[p])])
            out.instance_mask[p] = static_cast<std::uint16_t>(owner[p] + 1);
    return out;
}

} // namespace aads
