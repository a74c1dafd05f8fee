#include "aads/depth_refine.hpp"

#include "aads/config_util.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace aads {

void RefineConfig::validate() const
{
    if (median_kernel < 3 || median_kernel % 2 == 0)
        throw std::invalid_argument("median_kernel must be odd and >= 3");
    if (!(prune_rel > 0.0) || !(prune_abs > 0.0) || !(guided_eps > 0.0) || !(poisson_tol > 0.0))
        throw std::invalid_argument("refine tolerances must be positive");
    if (guided_radius < 1 || poisson_max_iter < 1)
        throw std::invalid_argument("guided_radius and poisson_max_iter must be positive");
}

RefineConfig RefineConfig::from_json(const nlohmann::json& j)
{
    const std::string where = "refine config";
    config::check_keys(j,
                       {"median_kernel", "prune_rel", "prune_abs", "guided_radius", "guided_eps", "poisson_tol",
                        "poisson_max_iter"},
                       where);
    RefineConfig c;
    config::read_opt(j, "median_kernel", c.median_kernel, where);
    config::read_opt(j, "prune_rel", c.prune_rel, where);
    config::read_opt(j, "prune_abs", c.prune_abs, where);
    config::read_opt(j, "guided_radius", c.guided_radius, where);
    config::read_opt(j, "guided_eps", c.guided_eps, where);
    config::read_opt(j, "poisson_tol", c.poisson_tol, where);
    config::read_opt(j, "poisson_max_iter", c.poisson_max_iter, where);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(where + ": " + e.what());
    }
    return c;
}

nlohmann::json RefineConfig::to_json() const
{
    return {{"median_kernel", median_kernel}, {"prune_rel", prune_rel},     {"prune_abs", prune_abs},
            {"guided_radius", guided_radius}, {"guided_eps", guided_eps},   {"poisson_tol", poisson_tol},
            {"poisson_max_iter", poisson_max_iter}};
}

DepthMap render_point_depth(const PointCloud& cloud, const Camera& view)
{
    if (cloud.empty())
        throw std::invalid_argument("render_point_depth: empty point cloud");
    const auto& k = view.intrinsics;
    DepthMap depth(k.width(), k.height(), kInvalidDepth);
    for (const auto& pt : cloud) {
        const auto proj = project(pt.position, k, view.pose);
        if (!proj)
            continue;
        const int x = static_cast<int>(std::lround(proj->pixel.x()));
        const int y = static_cast<int>(std::lround(proj->pixel.y()));
        if (!depth.contains(x, y))
            continue;
        double& d = depth(x, y);
        if (!is_valid_depth(d) || proj->depth < d)
            d = proj->depth;
    }
    return depth;
}

namespace {

// One pruning pass; returns the number of pixels removed.
std::size_t prune_pass(const DepthMap& in, DepthMap& out, const RefineConfig& cfg)
{
    const int r = cfg.median_kernel / 2;
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>(cfg.median_kernel * cfg.median_kernel));
    std::size_t removed = 0;
    out = in;
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            const double d = in(x, y);
            if (!is_valid_depth(d))
                continue;
            window.clear();
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    if (in.contains(x + dx, y + dy) && is_valid_depth(in(x + dx, y + dy)))
                        window.push_back(in(x + dx, y + dy));
            if (window.size() < 3)
                continue;
            const std::size_t mid = window.size() / 2;
            std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid), window.end());
            double median = window[mid];
            if (window.size() % 2 == 0) {
                const double lower = *std::max_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid));
                median = 0.5 * (median + lower);
            }
            if (std::abs(d - median) > std::max(cfg.prune_rel * median, cfg.prune_abs)) {
                out(x, y) = kInvalidDepth;
                ++removed;
            }
        }
    }
    return removed;
}

// Summed-area table with a zero row/column in front.
class BoxSum {
public:
    BoxSum(int w, int h) : w_(w), h_(h), s_(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(h + 1), 0.0) {}

    template <typename Fn>
    void build(Fn&& value)
    {
        for (int y = 0; y < h_; ++y) {
            double row = 0.0;
            for (int x = 0; x < w_; ++x) {
                row += value(x, y);
                at(x + 1, y + 1) = at(x + 1, y) + row;
            }
        }
    }

    // Sum over the window of radius r centred at (x,y), clipped to the raster.
    double window(int x, int y, int r) const
    {
        const int xa = std::max(x - r, 0);
        const int ya = std::max(y - r, 0);
        const int xb = std::min(x + r, w_ - 1) + 1;
        const int yb = std::min(y + r, h_ - 1) + 1;
        return at(xb, yb) - at(xa, yb) - at(xb, ya) + at(xa, ya);
    }

private:
    double& at(int x, int y) { return s_[static_cast<std::size_t>(y) * static_cast<std::size_t>(w_ + 1) + static_cast<std::size_t>(x)]; }
    double at(int x, int y) const { return s_[static_cast<std::size_t>(y) * static_cast<std::size_t>(w_ + 1) + static_cast<std::size_t>(x)]; }

    int w_, h_;
    std::vector<double> s_;
};

} // namespace

DepthMap median_prune(const DepthMap& depth, const RefineConfig& cfg)
{
    cfg.validate();
    DepthMap current = depth;
    DepthMap next;
    while (prune_pass(current, next, cfg) > 0)
        current = std::move(next);
    return current;
}

DepthMap guided_filter(const DepthMap& depth, const ImageRaster& guide, const RefineConfig& cfg)
{
    cfg.validate();
    if (!depth.same_shape(guide))
        throw std::invalid_argument("guided_filter: depth and guide differ in size");
    const int w = depth.width();
    const int h = depth.height();
    const int r = cfg.guided_radius;

    Raster<double> lum(w, h);
    for (std::size_t i = 0; i < lum.size(); ++i)
        lum[i] = luminance(guide[i]);
    auto valid = [&](int x, int y) { return is_valid_depth(depth(x, y)); };

    BoxSum n(w, h), si(w, h), sp(w, h), sip(w, h), sii(w, h);
    n.build([&](int x, int y) { return valid(x, y) ? 1.0 : 0.0; });
    si.build([&](int x, int y) { return valid(x, y) ? lum(x, y) : 0.0; });
    sp.build([&](int x, int y) { return valid(x, y) ? depth(x, y) : 0.0; });
    sip.build([&](int x, int y) { return valid(x, y) ? lum(x, y) * depth(x, y) : 0.0; });
    sii.build([&](int x, int y) { return valid(x, y) ? lum(x, y) * lum(x, y) : 0.0; });

    // Per-window linear coefficients, defined where the window holds a valid pixel.
    Raster<double> a(w, h, 0.0);
    Raster<double> b(w, h, 0.0);
    Raster<double> defined(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double count = n.window(x, y, r);
            if (count < 0.5)
                continue;
            const double mi = si.window(x, y, r) / count;
            const double mp = sp.window(x, y, r) / count;
            const double cov = sip.window(x, y, r) / count - mi * mp;
            const double var = std::max(sii.window(x, y, r) / count - mi * mi, 0.0);
            a(x, y) = cov / (var + cfg.guided_eps);
            b(x, y) = mp - a(x, y) * mi;
            defined(x, y) = 1.0;
        }
    }
    BoxSum sd(w, h), sa(w, h), sb(w, h);
    sd.build([&](int x, int y) { return defined(x, y); });
    sa.build([&](int x, int y) { return a(x, y); });
    sb.build([&](int x, int y) { return b(x, y); });

    DepthMap out(w, h, kInvalidDepth);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!valid(x, y))
                continue;
            const double count = sd.window(x, y, r);
            const double q = (sa.window(x, y, r) * lum(x, y) + sb.window(x, y, r)) / count;
            out(x, y) = is_valid_depth(q) ? q : depth(x, y);
        }
    }
    return out;
}

DepthMap poisson_complete(const DepthMap& depth, const RefineConfig& cfg)
{
    cfg.validate();
    if (count_valid(depth) == 0)
        throw std::invalid_argument("poisson_complete: depth map has no valid pixel");
    Mask unknown(depth.width(), depth.height(), 0);
    DepthMap out = depth;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        if (!is_valid_depth(depth[i])) {
            unknown[i] = 1;
            out[i] = 0.0;
        }
    }
    solve_laplace(out, unknown, cfg.laplace());
    return out;
}

DepthMap refine_depth(const DepthMap& depth, const ImageRaster& guide, const RefineConfig& cfg)
{
    return poisson_complete(guided_filter(median_prune(depth, cfg), guide, cfg), cfg);
}

} // namespace aads
