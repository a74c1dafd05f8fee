#include "aads/view_synth.hpp"

#include "aads/config_util.hpp"
#include "aads/rasterizer.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <numeric>
#include <tuple>

namespace aads {

void WarpConfig::validate() const
{
    if (reference_count == 0)
        throw std::invalid_argument("reference_count must be positive");
    if (!(depth_tol > 0.0) || angle_weight < 0.0)
        throw std::invalid_argument("depth_tol must be positive and angle_weight non-negative");
}

WarpConfig WarpConfig::from_json(const nlohmann::json& j)
{
    const std::string where = "warp config";
    config::check_keys(j, {"reference_count", "angle_weight", "max_hole_px", "depth_tol", "laplace_tol", "laplace_max_iter"},
                       where);
    WarpConfig c;
    config::read_opt(j, "reference_count", c.reference_count, where);
    config::read_opt(j, "angle_weight", c.angle_weight, where);
    config::read_opt(j, "max_hole_px", c.max_hole_px, where);
    config::read_opt(j, "depth_tol", c.depth_tol, where);
    config::read_opt(j, "laplace_tol", c.laplace.tolerance, where);
    config::read_opt(j, "laplace_max_iter", c.laplace.max_iterations, where);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(where + ": " + e.what());
    }
    return c;
}

nlohmann::json WarpConfig::to_json() const
{
    return {{"reference_count", reference_count}, {"angle_weight", angle_weight},
            {"max_hole_px", max_hole_px},         {"depth_tol", depth_tol},
            {"laplace_tol", laplace.tolerance},   {"laplace_max_iter", laplace.max_iterations}};
}

double reference_score(const Pose& reference, const Pose& target, double angle_weight)
{
    const double dist = (reference.center() - target.center()).norm();
    const double angle = angle_between(reference.optical_axis(), target.optical_axis());
    return dist * (1.0 + angle_weight * angle / std::numbers::pi);
}

std::vector<std::size_t> select_references(const Pose& target, std::span<const Pose> references, std::size_t k,
                                           double angle_weight)
{
    if (references.empty())
        throw std::invalid_argument("select_references: empty dataset");
    std::vector<double> score(references.size());
    for (std::size_t i = 0; i < references.size(); ++i)
        score[i] = reference_score(references[i], target, angle_weight);
    std::vector<std::size_t> order(references.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    order.resize(std::min(k, order.size()));
    return order;
}

std::vector<std::size_t> select_references(const Pose& target, std::span<const ViewSample> dataset, std::size_t k,
                                           double angle_weight)
{
    std::vector<Pose> poses;
    poses.reserve(dataset.size());
    for (const auto& v : dataset)
        poses.push_back(v.camera.pose);
    return select_references(target, std::span<const Pose>(poses), k, angle_weight);
}

namespace {

// One-sided tangent along (dx,dy) towards the neighbour with the smaller depth jump.
std::optional<Vec3> tangent(const ViewSample& ref, int x, int y, int dx, int dy, const Vec3& p)
{
    const double d = ref.depth(x, y);
    std::optional<Vec3> best;
    double best_jump = 0.3 * d;
    for (int s : {1, -1}) {
        const int nx = x + s * dx;
        const int ny = y + s * dy;
        if (!ref.depth.contains(nx, ny) || !is_valid_depth(ref.depth(nx, ny)))
            continue;
        const double jump = std::abs(ref.depth(nx, ny) - d);
        if (jump <= best_jump) {
            best_jump = jump;
            const Vec3 q = unproject(Vec2(nx, ny), ref.depth(nx, ny), ref.camera.intrinsics, ref.camera.pose);
            best = s * (q - p);
        }
    }
    return best;
}

} // namespace

DepthMap forward_map_depth(const ViewSample& ref, const Camera& target)
{
    ref.validate();
    const auto& tk = target.intrinsics;
    DepthMap proxy(tk.width(), tk.height(), kInvalidDepth);
    const Mat3& rt = target.pose.rotation();
    const Vec3& ct = target.pose.center();
    for (int y = 0; y < ref.depth.height(); ++y) {
        for (int x = 0; x < ref.depth.width(); ++x) {
            const double d = ref.depth(x, y);
            if (!is_valid_depth(d))
                continue;
            const Vec3 p = unproject(Vec2(x, y), d, ref.camera.intrinsics, ref.camera.pose);
            const auto proj = project_unclipped(p, tk, target.pose);
            if (!proj)
                continue;
            std::optional<Vec3> normal;
            const auto tx = tangent(ref, x, y, 1, 0, p);
            const auto ty = tangent(ref, x, y, 0, 1, p);
            if (tx && ty) {
                const Vec3 n = tx->cross(*ty);
                if (n.norm() > 0.0)
                    normal = n.normalized();
            }
            for_each_splat_pixel(proj->pixel, tk.width(), tk.height(), [&](int px, int py) {
                double z = proj->depth;
                if (normal) {
                    // Ray through the target pixel with unit target-frame z, so the ray
                    // parameter at the plane is the target depth.
                    const Vec3 ray = rt * Vec3((px - tk.cx()) / tk.fx(), (py - tk.cy()) / tk.fy(), 1.0);
                    const double denom = normal->dot(ray);
                    if (std::abs(denom) > 1e-9) {
                        const double t = normal->dot(p - ct) / denom;
                        if (t > 0.0 && std::abs(t - z) <= 0.3 * z)
                            z = t;
                    }
                }
                double& cur = proxy(px, py);
                if (!is_valid_depth(cur) || z < cur)
                    cur = z;
            });
        }
    }
    return proxy;
}

DepthMap inpaint_proxy_holes(const DepthMap& proxy, std::size_t max_hole_px, const LaplaceOptions& options)
{
    if (count_valid(proxy) == 0)
        return proxy;
    Mask invalid(proxy.width(), proxy.height(), 0);
    for (std::size_t i = 0; i < proxy.size(); ++i)
        invalid[i] = is_valid_depth(proxy[i]) ? 0 : 1;
    int count = 0;
    const Raster<int> comp = connected_components(invalid, count);
    std::vector<std::size_t> area(static_cast<std::size_t>(count) + 1, 0);
    for (int c : comp.values())
        ++area[static_cast<std::size_t>(c)];

    Mask unknown(proxy.width(), proxy.height(), 0);
    DepthMap out = proxy;
    bool any = false;
    for (std::size_t i = 0; i < comp.size(); ++i) {
        const int c = comp[i];
        if (c > 0 && area[static_cast<std::size_t>(c)] <= max_hole_px) {
            unknown[i] = 1;
            any = true;
        }
    }
    if (!any)
        return out;
    // Large holes stay invalid; give them a placeholder so they do not feed NaN into the
    // solver. They are not neighbours of any unknown pixel (components are maximal).
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!is_valid_depth(out[i]))
            out[i] = 0.0;
    solve_laplace(out, unknown, options);
    for (std::size_t i = 0; i < out.size(); ++i)
        if (invalid[i] && !unknown[i])
            out[i] = kInvalidDepth;
    return out;
}

Rgb sample_bilinear(const ImageRaster& image, const Vec2& pixel)
{
    const double x = std::clamp(pixel.x(), 0.0, static_cast<double>(image.width() - 1));
    const double y = std::clamp(pixel.y(), 0.0, static_cast<double>(image.height() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, image.width() - 1);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    return (1 - fy) * ((1 - fx) * image(x0, y0) + fx * image(x1, y0)) +
           fy * ((1 - fx) * image(x0, y1) + fx * image(x1, y1));
}

double sample_depth(const DepthMap& depth, const Vec2& pixel)
{
    if (pixel.x() < -0.5 || pixel.y() < -0.5 || pixel.x() >= depth.width() - 0.5 || pixel.y() >= depth.height() - 0.5)
        return kInvalidDepth;
    const double x = std::clamp(pixel.x(), 0.0, static_cast<double>(depth.width() - 1));
    const double y = std::clamp(pixel.y(), 0.0, static_cast<double>(depth.height() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    double inv = 0.0;
    const std::array<std::tuple<int, int, double>, 4> taps{{{x0, y0, (1 - fx) * (1 - fy)},
                                                           {x0 + 1, y0, fx * (1 - fy)},
                                                           {x0, y0 + 1, (1 - fx) * fy},
                                                           {x0 + 1, y0 + 1, fx * fy}}};
    for (const auto& [tx, ty, w] : taps) {
        if (w <= 0.0)
            continue;
        if (!depth.contains(tx, ty) || !is_valid_depth(depth(tx, ty)))
            return kInvalidDepth;
        inv += w / depth(tx, ty);
    }
    return inv > 0.0 ? 1.0 / inv : kInvalidDepth;
}

WarpedView backward_warp(const ViewSample& ref, const DepthMap& target_proxy, const Camera& target, double depth_tol)
{
    ref.validate();
    const auto& tk = target.intrinsics;
    if (target_proxy.width() != tk.width() || target_proxy.height() != tk.height())
        throw std::invalid_argument("backward_warp: proxy does not match the target raster");
    WarpedView out;
    out.color = ImageRaster(tk.width(), tk.height(), Rgb::Zero());
    out.depth_proxy = DepthMap(tk.width(), tk.height(), kInvalidDepth);
    out.occlusion = Mask(tk.width(), tk.height(), 1);
    for (int y = 0; y < tk.height(); ++y) {
        for (int x = 0; x < tk.width(); ++x) {
            const double z = target_proxy(x, y);
            if (!is_valid_depth(z))
                continue;
            const Vec3 p = unproject(Vec2(x, y), z, tk, target.pose);
            const auto proj = project(p, ref.camera.intrinsics, ref.camera.pose);
            if (!proj)
                continue;
            out.color(x, y) = sample_bilinear(ref.image, proj->pixel);
            const double ref_depth = sample_depth(ref.depth, proj->pixel);
            if (!is_valid_depth(ref_depth) || std::abs(ref_depth - proj->depth) > depth_tol)
                continue;
            out.depth_proxy(x, y) = z;
            out.occlusion(x, y) = 0;
        }
    }
    return out;
}

WarpedView warp_reference(const ViewSample& ref, std::size_t source_index, const Camera& target, const WarpConfig& cfg)
{
    const DepthMap proxy = inpaint_proxy_holes(forward_map_depth(ref, target), cfg.max_hole_px, cfg.laplace);
    WarpedView w = backward_warp(ref, proxy, target, cfg.depth_tol);
    w.source_index = source_index;
    return w;
}

} // namespace aads
