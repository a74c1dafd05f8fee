#include "aads/synthetic_scene.hpp"

#include "aads/config_util.hpp"

#include <cmath>
#include <numbers>

namespace aads {

namespace {

using nlohmann::json;

Vec3 vec3(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key))
        throw ParseError(where + ": missing field \"" + key + "\"");
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3)
        throw ParseError(where + ": \"" + key + "\" must be a 3-vector");
    try {
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
}

json to_array(const Vec3& v)
{
    return json::array({v.x(), v.y(), v.z()});
}

Texture texture_from_json(const json& j, const std::string& where)
{
    Texture t;
    if (j.contains("color"))
        t.color_a = t.color_b = vec3(j, "color", where);
    if (j.contains("checker")) {
        const auto& c = j.at("checker");
        t.checker = c.value("size", 1.0);
        t.color_a = vec3(c, "color_a", where);
        t.color_b = vec3(c, "color_b", where);
    }
    return t;
}

Mat3 yaw_matrix(double yaw)
{
    return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

} // namespace

SceneSpec SceneSpec::from_json(const json& j)
{
    SceneSpec spec;
    if (!j.is_object() || !j.contains("primitives") || !j.at("primitives").is_array())
        throw ParseError("scene: expected {\"primitives\": [...]}");
    config::read_opt(j, "point_spacing", spec.point_spacing, "scene");
    if (j.contains("background"))
        spec.background = vec3(j, "background", "scene");
    if (j.contains("light"))
        spec.light = vec3(j, "light", "scene").normalized();
    std::size_t idx = 0;
    for (const auto& pj : j.at("primitives")) {
        const std::string where = "scene primitive " + std::to_string(idx++);
        if (!pj.is_object() || !pj.contains("type"))
            throw ParseError(where + ": missing \"type\"");
        Primitive p;
        const std::string type = pj.at("type").get<std::string>();
        p.class_id = pj.value("class", static_cast<int>(label::kUnknown));
        p.texture = texture_from_json(pj, where);
        if (type == "plane") {
            p.kind = Primitive::Kind::Plane;
            p.center = vec3(pj, "center", where);
            p.axis_u = vec3(pj, "axis_u", where).normalized();
            p.axis_v = vec3(pj, "axis_v", where);
            p.axis_v = (p.axis_v - p.axis_v.dot(p.axis_u) * p.axis_u).normalized();
            const auto ext = pj.value("half_extent", std::vector<double>{1.0, 1.0});
            if (ext.size() != 2)
                throw ParseError(where + ": half_extent needs 2 values");
            p.half_u = ext[0];
            p.half_v = ext[1];
        } else if (type == "box") {
            p.kind = Primitive::Kind::Box;
            p.center = vec3(pj, "center", where);
            p.size = vec3(pj, "size", where);
            p.yaw = pj.value("yaw", 0.0);
        } else if (type == "sphere") {
            p.kind = Primitive::Kind::Sphere;
            p.center = vec3(pj, "center", where);
            p.radius = pj.value("radius", 1.0);
        } else {
            throw ParseError(where + ": unknown primitive type \"" + type + "\"");
        }
        spec.primitives.push_back(p);
    }
    return spec;
}

json SceneSpec::to_json() const
{
    json prims = json::array();
    for (const auto& p : primitives) {
        json pj;
        pj["class"] = p.class_id;
        if (p.texture.checker > 0.0)
            pj["checker"] = {{"size", p.texture.checker},
                             {"color_a", to_array(p.texture.color_a)},
                             {"color_b", to_array(p.texture.color_b)}};
        else
            pj["color"] = to_array(p.texture.color_a);
        pj["center"] = to_array(p.center);
        switch (p.kind) {
        case Primitive::Kind::Plane:
            pj["type"] = "plane";
            pj["axis_u"] = to_array(p.axis_u);
            pj["axis_v"] = to_array(p.axis_v);
            pj["half_extent"] = {p.half_u, p.half_v};
            break;
        case Primitive::Kind::Box:
            pj["type"] = "box";
            pj["size"] = to_array(p.size);
            pj["yaw"] = p.yaw;
            break;
        case Primitive::Kind::Sphere:
            pj["type"] = "sphere";
            pj["radius"] = p.radius;
            break;
        }
        prims.push_back(pj);
    }
    return {{"primitives", prims},
            {"point_spacing", point_spacing},
            {"background", to_array(background)},
            {"light", to_array(light)}};
}

RayTracer::RayTracer(SceneSpec spec) : spec_(std::move(spec)) {}

std::optional<RayHit> RayTracer::intersect(const Vec3& origin, const Vec3& direction, double t_min) const
{
    std::optional<RayHit> best;
    auto consider = [&](double t, const Vec3& normal, std::size_t idx) {
        if (!(t > t_min) || (best && t >= best->t))
            return;
        RayHit h;
        h.t = t;
        h.point = origin + t * direction;
        h.normal = normal;
        h.primitive = idx;
        best = h;
    };
    for (std::size_t i = 0; i < spec_.primitives.size(); ++i) {
        const Primitive& p = spec_.primitives[i];
        switch (p.kind) {
        case Primitive::Kind::Plane: {
            const Vec3 n = p.plane_normal();
            const double denom = n.dot(direction);
            if (std::abs(denom) < 1e-15)
                break;
            const double t = n.dot(p.center - origin) / denom;
            const Vec3 q = origin + t * direction - p.center;
            if (std::abs(q.dot(p.axis_u)) <= p.half_u && std::abs(q.dot(p.axis_v)) <= p.half_v)
                consider(t, n, i);
            break;
        }
        case Primitive::Kind::Box: {
            const Mat3 r = yaw_matrix(p.yaw);
            const Vec3 o = r.transpose() * (origin - p.center);
            const Vec3 d = r.transpose() * direction;
            const Vec3 half = 0.5 * p.size;
            double t0 = -std::numeric_limits<double>::infinity();
            double t1 = std::numeric_limits<double>::infinity();
            int axis0 = 0;
            int axis1 = 0;
            bool miss = false;
            for (int a = 0; a < 3 && !miss; ++a) {
                if (std::abs(d[a]) < 1e-15) {
                    if (std::abs(o[a]) > half[a])
                        miss = true;
                    continue;
                }
                double ta = (-half[a] - o[a]) / d[a];
                double tb = (half[a] - o[a]) / d[a];
                if (ta > tb)
                    std::swap(ta, tb);
                if (ta > t0) {
                    t0 = ta;
                    axis0 = a;
                }
                if (tb < t1) {
                    t1 = tb;
                    axis1 = a;
                }
            }
            if (miss || t0 > t1)
                break;
            // Entering face when the origin is outside, exit face from inside.
            const bool outside = t0 > t_min;
            const double t = outside ? t0 : t1;
            const int axis = outside ? axis0 : axis1;
            Vec3 n_local = Vec3::Zero();
            const double coord = o[axis] + t * d[axis];
            n_local[axis] = coord > 0 ? 1.0 : -1.0;
            consider(t, r * n_local, i);
            break;
        }
        case Primitive::Kind::Sphere: {
            const Vec3 oc = origin - p.center;
            const double b = oc.dot(direction);
            const double c = oc.squaredNorm() - p.radius * p.radius;
            const double disc = b * b - c;
            if (disc < 0.0)
                break;
            const double s = std::sqrt(disc);
            for (double t : {-b - s, -b + s}) {
                if (t > t_min) {
                    consider(t, (origin + t * direction - p.center) / p.radius, i);
                    break;
                }
            }
            break;
        }
        }
    }
    if (best) {
        best->class_id = spec_.primitives[best->primitive].class_id;
        best->color = shade(best->primitive, best->point, best->normal);
    }
    return best;
}

Rgb RayTracer::albedo(std::size_t primitive, const Vec3& point, const Vec3& normal) const
{
    const Primitive& p = spec_.primitives[primitive];
    const Texture& tex = p.texture;
    if (tex.checker <= 0.0)
        return tex.color_a;
    long long parity = 0;
    if (p.kind == Primitive::Kind::Plane) {
        const Vec3 q = point - p.center;
        parity = static_cast<long long>(std::floor(q.dot(p.axis_u) / tex.checker)) +
                 static_cast<long long>(std::floor(q.dot(p.axis_v) / tex.checker));
    } else {
        // Solid checker, evaluated just inside the surface so face planes are unambiguous.
        const Vec3 q = point - 1e-7 * normal - p.center;
        parity = static_cast<long long>(std::floor(q.x() / tex.checker)) +
                 static_cast<long long>(std::floor(q.y() / tex.checker)) +
                 static_cast<long long>(std::floor(q.z() / tex.checker));
    }
    return (parity & 1) ? tex.color_b : tex.color_a;
}

Rgb RayTracer::shade(std::size_t primitive, const Vec3& point, const Vec3& normal) const
{
    const double lambert = 0.6 + 0.4 * std::abs(normal.dot(spec_.light));
    return (albedo(primitive, point, normal) * lambert).cwiseMin(1.0).cwiseMax(0.0);
}

ViewSample RayTracer::render_view(const Camera& camera, int supersample) const
{
    const auto& k = camera.intrinsics;
    const int ss = std::max(1, supersample);
    ViewSample view{ImageRaster(k.width(), k.height()), DepthMap(k.width(), k.height(), kInvalidDepth),
                    LabelRaster(k.width(), k.height(), label::kUnknown), camera};
    const Vec3& origin = camera.pose.center();
    const Vec3 axis = camera.pose.optical_axis();
    for (int y = 0; y < k.height(); ++y) {
        for (int x = 0; x < k.width(); ++x) {
            Rgb acc = Rgb::Zero();
            for (int sy = 0; sy < ss; ++sy) {
                for (int sx = 0; sx < ss; ++sx) {
                    const Vec2 sub(x - 0.5 + (sx + 0.5) / ss, y - 0.5 + (sy + 0.5) / ss);
                    const auto hit = intersect(origin, pixel_ray(sub, k, camera.pose));
                    acc += hit ? hit->color : spec_.background;
                }
            }
            view.image(x, y) = acc / (ss * ss);
            const Vec3 dir = pixel_ray(Vec2(x, y), k, camera.pose);
            if (const auto hit = intersect(origin, dir)) {
                view.depth(x, y) = hit->t * dir.dot(axis);
                view.labels(x, y) = hit->class_id;
            }
        }
    }
    return view;
}

PointCloud sample_points(const Primitive& prim, std::size_t index, double spacing, const RayTracer& tracer)
{
    PointCloud out;
    auto emit = [&](const Vec3& p, const Vec3& n) {
        out.push_back({p, tracer.shade(index, p, n), prim.class_id});
    };
    auto grid = [&](const Vec3& c, const Vec3& u, const Vec3& v, double hu, double hv, const Vec3& n) {
        const int nu = std::max(1, static_cast<int>(std::ceil(2 * hu / spacing)));
        const int nv = std::max(1, static_cast<int>(std::ceil(2 * hv / spacing)));
        for (int j = 0; j <= nv; ++j)
            for (int i = 0; i <= nu; ++i)
                emit(c + (-hu + 2 * hu * i / nu) * u + (-hv + 2 * hv * j / nv) * v, n);
    };
    switch (prim.kind) {
    case Primitive::Kind::Plane:
        grid(prim.center, prim.axis_u, prim.axis_v, prim.half_u, prim.half_v, prim.plane_normal());
        break;
    case Primitive::Kind::Box: {
        const Mat3 r = yaw_matrix(prim.yaw);
        const Vec3 h = 0.5 * prim.size;
        for (int a = 0; a < 3; ++a) {
            const int b = (a + 1) % 3;
            const int c = (a + 2) % 3;
            for (int s : {-1, 1}) {
                Vec3 n = Vec3::Zero();
                n[a] = s;
                grid(prim.center + r * (s * h[a] * Vec3::Unit(a)), r * Vec3::Unit(b), r * Vec3::Unit(c), h[b], h[c],
                     r * n);
            }
        }
        break;
    }
    case Primitive::Kind::Sphere: {
        const int rings = std::max(4, static_cast<int>(std::ceil(std::numbers::pi * prim.radius / spacing)));
        for (int i = 0; i <= rings; ++i) {
            const double theta = std::numbers::pi * i / rings;
            const double ring_r = prim.radius * std::sin(theta);
            const int segs = std::max(1, static_cast<int>(std::ceil(2 * std::numbers::pi * ring_r / spacing)));
            for (int j = 0; j < segs; ++j) {
                const double phi = 2 * std::numbers::pi * j / segs;
                const Vec3 n(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
                emit(prim.center + prim.radius * n, n);
            }
        }
        break;
    }
    }
    return out;
}

std::vector<Triangle> tessellate(const Primitive& prim, const Rgb& color)
{
    std::vector<Triangle> tris;
    switch (prim.kind) {
    case Primitive::Kind::Plane: {
        const Vec3 a = prim.center - prim.half_u * prim.axis_u - prim.half_v * prim.axis_v;
        const Vec3 b = prim.center + prim.half_u * prim.axis_u - prim.half_v * prim.axis_v;
        const Vec3 c = prim.center + prim.half_u * prim.axis_u + prim.half_v * prim.axis_v;
        const Vec3 d = prim.center - prim.half_u * prim.axis_u + prim.half_v * prim.axis_v;
        tris.push_back({{a, b, c}, color, prim.class_id});
        tris.push_back({{a, c, d}, color, prim.class_id});
        break;
    }
    case Primitive::Kind::Box:
        tris = box_triangles(prim.center, prim.size, prim.yaw, color, prim.class_id);
        break;
    case Primitive::Kind::Sphere: {
        constexpr int kRings = 16;
        constexpr int kSegs = 32;
        auto vertex = [&](int i, int j) {
            const double theta = std::numbers::pi * i / kRings;
            const double phi = 2 * std::numbers::pi * j / kSegs;
            return Vec3(prim.center +
                        prim.radius * Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                           std::cos(theta)));
        };
        for (int i = 0; i < kRings; ++i)
            for (int j = 0; j < kSegs; ++j) {
                const Vec3 a = vertex(i, j), b = vertex(i + 1, j), c = vertex(i + 1, j + 1), d = vertex(i, j + 1);
                if (i > 0)
                    tris.push_back({{a, b, d}, color, prim.class_id});
                if (i + 1 < kRings)
                    tris.push_back({{b, c, d}, color, prim.class_id});
            }
        break;
    }
    }
    return tris;
}

SceneSpec demo_scene()
{
    SceneSpec spec;
    auto plane = [](Vec3 c, Vec3 u, Vec3 v, double hu, double hv, std::uint16_t cls, Texture tex) {
        Primitive p;
        p.kind = Primitive::Kind::Plane;
        p.center = c;
        p.axis_u = u;
        p.axis_v = v;
        p.half_u = hu;
        p.half_v = hv;
        p.class_id = cls;
        p.texture = tex;
        return p;
    };
    auto box = [](Vec3 c, Vec3 size, double yaw, std::uint16_t cls, Texture tex) {
        Primitive p;
        p.kind = Primitive::Kind::Box;
        p.center = c;
        p.size = size;
        p.yaw = yaw;
        p.class_id = cls;
        p.texture = tex;
        return p;
    };
    const Texture road{Rgb(0.32, 0.32, 0.34), Rgb(0.5, 0.5, 0.52), 1.0};
    const Texture facade{Rgb(0.62, 0.45, 0.35), Rgb(0.75, 0.6, 0.48), 2.0};
    const Texture far_wall{Rgb(0.55, 0.6, 0.65), Rgb(0.7, 0.72, 0.75), 2.5};
    spec.primitives.push_back(plane(Vec3(15, 0, 0), Vec3::UnitX(), Vec3::UnitY(), 30, 10, label::kRoad, road));
    spec.primitives.push_back(plane(Vec3(15, 6, 10), Vec3::UnitX(), Vec3::UnitZ(), 30, 10, label::kBuilding, facade));
    spec.primitives.push_back(plane(Vec3(15, -6, 10), Vec3::UnitX(), Vec3::UnitZ(), 30, 10, label::kBuilding, facade));
    spec.primitives.push_back(plane(Vec3(40, 0, 12.5), Vec3::UnitY(), Vec3::UnitZ(), 10, 12.5, label::kBuilding, far_wall));
    spec.primitives.push_back(box(Vec3(12, -2.2, 0.75), Vec3(4.2, 1.8, 1.5), 0.1, label::kCar,
                                  Texture{Rgb(0.75, 0.15, 0.12), Rgb(0.55, 0.1, 0.1), 0.5}));
    spec.primitives.push_back(box(Vec3(22, 2.5, 1.5), Vec3(7, 2.5, 3), -0.05, label::kTruck,
                                  Texture{Rgb(0.2, 0.35, 0.7), Rgb(0.85, 0.85, 0.8), 1.0}));
    spec.primitives.push_back(box(Vec3(8, -4.8, 2), Vec3(0.25, 0.25, 4), 0.0, label::kPole,
                                  Texture{Rgb::Constant(0.8), Rgb::Constant(0.8), 0.0}));
    Primitive tree;
    tree.kind = Primitive::Kind::Sphere;
    tree.center = Vec3(9, 4.4, 1.2);
    tree.radius = 1.2;
    tree.class_id = label::kVegetation;
    tree.texture = Texture{Rgb(0.2, 0.55, 0.2), Rgb(0.3, 0.65, 0.25), 0.4};
    spec.primitives.push_back(tree);
    spec.point_spacing = 0.1;
    return spec;
}

SyntheticScene make_synthetic_scene(const SceneSpec& spec)
{
    if (spec.primitives.empty())
        throw std::invalid_argument("make_synthetic_scene: no primitives");
    if (!(spec.point_spacing > 0.0))
        throw std::invalid_argument("make_synthetic_scene: point_spacing must be positive");
    SyntheticScene scene{spec, {}, RayTracer(spec)};
    for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
        const Primitive& p = spec.primitives[i];
        auto pts = sample_points(p, i, spec.point_spacing, scene.tracer);
        scene.geometry.points.insert(scene.geometry.points.end(), pts.begin(), pts.end());
        auto tris = tessellate(p, p.texture.color_a);
        scene.geometry.triangles.insert(scene.geometry.triangles.end(), tris.begin(), tris.end());
    }
    return scene;
}

} // namespace aads
