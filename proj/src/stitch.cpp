#include "aads/stitch.hpp"

#include "aads/config_util.hpp"
#include "aads/errors.hpp"
#include "aads/rng.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <algorithm>
#include <limits>

namespace aads {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

// ---------------------------------------------------------------------------------------------
// Weights

void EnergyWeights::validate() const
{
    for (double v : {lambda1, lambda2, lambda3, lambda4, lambda5, angle_hook, pos_scale, dir_scale})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("energy weights must be finite and non-negative");
    if (!(tau_c > 0.0) || !(tau_d > 0.0))
        throw std::invalid_argument("tau_c and tau_d must be positive");
}

EnergyWeights EnergyWeights::scaled(double factor) const
{
    EnergyWeights w = *this;
    w.lambda1 *= factor;
    w.lambda2 *= factor;
    w.lambda3 *= factor;
    w.lambda4 *= factor;
    w.lambda5 *= factor;
    return w;
}

EnergyWeights EnergyWeights::from_json(const nlohmann::json& j)
{
    const std::string where = "energy weights";
    config::check_keys(j,
                       {"lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "tau_c", "tau_d", "angle_hook",
                        "pos_scale", "dir_scale"},
                       where);
    EnergyWeights w;
    config::read_opt(j, "lambda1", w.lambda1, where);
    config::read_opt(j, "lambda2", w.lambda2, where);
    config::read_opt(j, "lambda3", w.lambda3, where);
    config::read_opt(j, "lambda4", w.lambda4, where);
    config::read_opt(j, "lambda5", w.lambda5, where);
    config::read_opt(j, "tau_c", w.tau_c, where);
    config::read_opt(j, "tau_d", w.tau_d, where);
    config::read_opt(j, "angle_hook", w.angle_hook, where);
    config::read_opt(j, "pos_scale", w.pos_scale, where);
    config::read_opt(j, "dir_scale", w.dir_scale, where);
    try {
        w.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(where + ": " + e.what());
    }
    return w;
}

nlohmann::json EnergyWeights::to_json() const
{
    return {{"lambda1", lambda1}, {"lambda2", lambda2},       {"lambda3", lambda3},     {"lambda4", lambda4},
            {"lambda5", lambda5}, {"tau_c", tau_c},           {"tau_d", tau_d},         {"angle_hook", angle_hook},
            {"pos_scale", pos_scale}, {"dir_scale", dir_scale}};
}

// ---------------------------------------------------------------------------------------------
// Generic MRF

Mrf::Mrf(std::size_t nodes, std::size_t labels) : num_labels(labels), unary(nodes * labels, 0.0)
{
    if (labels == 0)
        throw std::invalid_argument("Mrf: need at least one label");
}

void Mrf::add_edge(std::size_t u, std::size_t v, std::vector<double> cost)
{
    if (u == v || u >= num_nodes() || v >= num_nodes())
        throw std::invalid_argument("Mrf::add_edge: bad endpoints");
    if (cost.size() != num_labels * num_labels)
        throw std::invalid_argument("Mrf::add_edge: cost table size mismatch");
    if (u > v) {
        std::vector<double> t(cost.size());
        for (std::size_t a = 0; a < num_labels; ++a)
            for (std::size_t b = 0; b < num_labels; ++b)
                t[b * num_labels + a] = cost[a * num_labels + b];
        cost = std::move(t);
        std::swap(u, v);
    }
    edges.push_back({u, v, std::move(cost)});
}

void Mrf::validate() const
{
    if (num_labels == 0 || unary.size() % num_labels != 0)
        throw std::invalid_argument("Mrf: malformed unary table");
    for (std::size_t n = 0; n < num_nodes(); ++n) {
        bool feasible = false;
        for (std::size_t l = 0; l < num_labels; ++l) {
            const double u = unary_at(n, l);
            if (std::isnan(u) || u == -kInf)
                throw std::invalid_argument("Mrf: unary costs must be finite or +inf");
            feasible = feasible || std::isfinite(u);
        }
        if (!feasible)
            throw std::invalid_argument("Mrf: node " + std::to_string(n) + " has no finite label");
    }
    for (const auto& e : edges) {
        if (e.a >= e.b || e.b >= num_nodes() || e.cost.size() != num_labels * num_labels)
            throw std::invalid_argument("Mrf: malformed edge");
        for (double c : e.cost)
            if (!std::isfinite(c))
                throw std::invalid_argument("Mrf: pairwise costs must be finite");
    }
}

double mrf_energy(const Mrf& mrf, std::span<const std::size_t> labels)
{
    if (labels.size() != mrf.num_nodes())
        throw std::invalid_argument("mrf_energy: labeling size mismatch");
    double e = 0.0;
    for (std::size_t n = 0; n < labels.size(); ++n)
        e += mrf.unary_at(n, labels[n]);
    for (const auto& edge : mrf.edges)
        e += edge.cost[labels[edge.a] * mrf.num_labels + labels[edge.b]];
    return e;
}

TrwsResult trws_solve(const Mrf& mrf, const TrwsOptions& options)
{
    mrf.validate();
    const std::size_t n = mrf.num_nodes();
    const std::size_t L = mrf.num_labels;
    TrwsResult result;
    if (n == 0)
        return result;

    std::vector<std::vector<std::size_t>> forward(n), backward(n);
    for (std::size_t e = 0; e < mrf.edges.size(); ++e) {
        forward[mrf.edges[e].a].push_back(e);
        backward[mrf.edges[e].b].push_back(e);
    }
    std::vector<double> gamma(n);
    for (std::size_t i = 0; i < n; ++i)
        gamma[i] = 1.0 / static_cast<double>(std::max<std::size_t>({forward[i].size(), backward[i].size(), 1}));

    // Ties between equal-energy labelings are broken by a tiny perturbation that favours lower
    // labels with generic per-node weights, so the perturbed optimum is unique. The reported bound
    // subtracts the largest possible perturbation and stays valid for the original energy.
    double scale = 0.0;
    for (double u : mrf.unary)
        if (std::isfinite(u))
            scale = std::max(scale, std::abs(u));
    for (const auto& e : mrf.edges)
        for (double c : e.cost)
            scale = std::max(scale, std::abs(c));
    const double eps = options.tie_break ? 1e-9 * (scale > 0.0 ? scale : 1.0) : 0.0;
    std::vector<double> tie(n);
    std::vector<double> du = mrf.unary;
    double max_tie = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tie[i] = eps * (1.0 + rng::to_unit(rng::mix(i)));
        for (std::size_t l = 0; l < L; ++l)
            du[i * L + l] += tie[i] * static_cast<double>(l);
        max_tie += tie[i] * static_cast<double>(L - 1);
    }

    // One message per edge, always pointing into the endpoint that was last updated.
    std::vector<double> msg(mrf.edges.size() * L, 0.0);
    std::vector<double> di(L), tmp(L), fresh(L);

    auto gather = [&](std::size_t i) {
        for (std::size_t l = 0; l < L; ++l)
            di[l] = du[i * L + l];
        for (std::size_t e : forward[i])
            for (std::size_t l = 0; l < L; ++l)
                di[l] += msg[e * L + l];
        for (std::size_t e : backward[i])
            for (std::size_t l = 0; l < L; ++l)
                di[l] += msg[e * L + l];
    };
    // Replace the message on edge e (currently into `from`) by the message out of `from`.
    auto send = [&](std::size_t e, bool from_tail, double g) {
        const auto& cost = mrf.edges[e].cost;
        double* m = &msg[e * L];
        for (std::size_t l = 0; l < L; ++l)
            tmp[l] = g * di[l] - m[l];
        double vmin = kInf;
        for (std::size_t kd = 0; kd < L; ++kd) {
            double best = kInf;
            for (std::size_t ks = 0; ks < L; ++ks) {
                const double c = from_tail ? cost[ks * L + kd] : cost[kd * L + ks];
                best = std::min(best, tmp[ks] + c);
            }
            fresh[kd] = best;
            vmin = std::min(vmin, best);
        }
        for (std::size_t l = 0; l < L; ++l)
            m[l] = fresh[l] - vmin;
        return vmin;
    };

    std::vector<std::size_t> labels(n, 0);
    double best_energy = kInf;
    double best_perturbed = kInf;
    double prev_bound = -kInf;
    double best_bound = -kInf;
    // Fix nodes one by one in sweep order: fixed neighbours contribute their pairwise column,
    // the not yet fixed ones their current message (which points into this node).
    auto decode = [&](bool ascending) {
        double tie_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = ascending ? k : n - 1 - k;
            for (std::size_t l = 0; l < L; ++l)
                di[l] = du[i * L + l];
            for (std::size_t e : backward[i]) {
                const auto& cost = mrf.edges[e].cost;
                if (ascending) {
                    const std::size_t la = labels[mrf.edges[e].a];
                    for (std::size_t l = 0; l < L; ++l)
                        di[l] += cost[la * L + l];
                } else {
                    for (std::size_t l = 0; l < L; ++l)
                        di[l] += msg[e * L + l];
                }
            }
            for (std::size_t e : forward[i]) {
                const auto& cost = mrf.edges[e].cost;
                if (ascending) {
                    for (std::size_t l = 0; l < L; ++l)
                        di[l] += msg[e * L + l];
                } else {
                    const std::size_t lb = labels[mrf.edges[e].b];
                    for (std::size_t l = 0; l < L; ++l)
                        di[l] += cost[l * L + lb];
                }
            }
            labels[i] = static_cast<std::size_t>(std::min_element(di.begin(), di.end()) - di.begin());
            tie_sum += tie[i] * static_cast<double>(labels[i]);
        }
        const double energy = mrf_energy(mrf, labels);
        const double perturbed = energy + tie_sum;
        if (energy < best_energy || (energy == best_energy && perturbed < best_perturbed)) {
            best_energy = energy;
            best_perturbed = perturbed;
            result.labels = labels;
        }
    };

    for (int iter = 1;; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            gather(i);
            for (std::size_t e : forward[i])
                send(e, true, gamma[i]);
        }
        decode(false);
        double bound = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            gather(i);
            const double vmin = *std::min_element(di.begin(), di.end());
            for (double& v : di)
                v -= vmin;
            bound += vmin;
            for (std::size_t e : backward[i])
                bound += send(e, false, gamma[i]);
        }
        result.bound_history.push_back(bound - max_tie);

        decode(true);
        result.iterations = iter;
        best_bound = std::max(best_bound, bound);
        result.lower_bound = best_bound - max_tie;
        if (iter >= options.max_iter || best_perturbed - best_bound <= 1e-12 * std::max(1.0, std::abs(best_perturbed)))
            break;
        // The gain test must also resolve the tie-break quantum before stopping.
        if (iter > 1 && bound - prev_bound < (eps > 0.0 ? std::min(options.bound_tol, 1e-3 * eps) : options.bound_tol))
            break;
        prev_bound = bound;
    }
    result.energy = best_energy;
    return result;
}

std::vector<std::size_t> icm_solve(const Mrf& mrf, std::vector<std::size_t> labels, int max_sweeps)
{
    mrf.validate();
    const std::size_t n = mrf.num_nodes();
    const std::size_t L = mrf.num_labels;
    if (labels.size() != n)
        throw std::invalid_argument("icm_solve: initial labeling size mismatch");
    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t e = 0; e < mrf.edges.size(); ++e) {
        incident[mrf.edges[e].a].push_back(e);
        incident[mrf.edges[e].b].push_back(e);
    }
    std::vector<double> local(L);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t l = 0; l < L; ++l)
                local[l] = mrf.unary_at(i, l);
            for (std::size_t e : incident[i]) {
                const auto& edge = mrf.edges[e];
                for (std::size_t l = 0; l < L; ++l)
                    local[l] += edge.a == i ? edge.cost[l * L + labels[edge.b]] : edge.cost[labels[edge.a] * L + l];
            }
            const auto best = static_cast<std::size_t>(std::min_element(local.begin(), local.end()) - local.begin());
            if (local[best] < local[labels[i]]) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed)
            break;
    }
    return labels;
}

// ---------------------------------------------------------------------------------------------
// Stitching energy

namespace {

void check_warps(std::span<const WarpedView> warps)
{
    if (warps.empty())
        throw std::invalid_argument("stitch: no candidates");
    for (const auto& w : warps)
        if (!w.color.same_shape(warps[0].color) || !w.depth_proxy.same_shape(w.color) ||
            !w.occlusion.same_shape(w.color))
            throw std::invalid_argument("stitch: candidate rasters differ in size");
}

bool visible(const WarpedView& w, std::size_t p)
{
    return w.occlusion[p] == 0;
}

Rgb gradient(const WarpedView& w, int x, int y, int dx, int dy)
{
    const int qx = x + dx;
    const int qy = y + dy;
    if (!w.color.contains(qx, qy))
        return Rgb::Zero();
    const std::size_t p = w.color.index(x, y);
    const std::size_t q = w.color.index(qx, qy);
    if (!visible(w, p) || !visible(w, q))
        return Rgb::Zero();
    return w.color[q] - w.color[p];
}

} // namespace

UnaryCosts unary_costs(std::span<const WarpedView> warps, std::span<const Pose> ref_poses, const Camera& target,
                       const EnergyWeights& weights)
{
    check_warps(warps);
    weights.validate();
    if (ref_poses.size() != warps.size())
        throw std::invalid_argument("unary_costs: one pose per candidate required");
    const auto& k = target.intrinsics;
    if (warps[0].color.width() != k.width() || warps[0].color.height() != k.height())
        throw std::invalid_argument("unary_costs: candidates do not match the target raster");
    UnaryCosts out{k.width(), k.height(), warps.size(), std::vector<double>(warps[0].color.size() * warps.size())};
    const Vec3& ct = target.pose.center();
    for (std::size_t j = 0; j < warps.size(); ++j) {
        const Vec3& cj = ref_poses[j].center();
        const double w_label = weights.pos_scale * (cj - ct).norm() * weights.dir_scale *
                               angle_between(ref_poses[j].optical_axis(), target.pose.optical_axis());
        for (int y = 0; y < k.height(); ++y) {
            for (int x = 0; x < k.width(); ++x) {
                const std::size_t p = warps[j].color.index(x, y);
                double& c = out.cost[p * warps.size() + j];
                if (!visible(warps[j], p) || !is_valid_depth(warps[j].depth_proxy[p])) {
                    c = kInf;
                    continue;
                }
                const Vec3 s = unproject(Vec2(x, y), warps[j].depth_proxy[p], k, target.pose);
                const double e_angle = angle_between(s - ct, s - cj);
                c = weights.lambda1 * std::max(e_angle, weights.angle_hook) * w_label;
            }
        }
    }
    return out;
}

PairwiseTerms pairwise_terms(std::size_t i, std::size_t j, std::size_t a, std::size_t b,
                             std::span<const WarpedView> warps, const EnergyWeights& weights)
{
    PairwiseTerms t;
    if (a == b)
        return t;
    const WarpedView& wa = warps[a];
    const WarpedView& wb = warps[b];
    const int width = wa.color.width();
    for (std::size_t p : {i, j}) {
        const bool va = visible(wa, p);
        const bool vb = visible(wb, p);
        if (va && vb) {
            t.e3 += std::min((wa.color[p] - wb.color[p]).squaredNorm(), weights.tau_c);
            t.e4 += std::min(std::abs(wa.depth_proxy[p] - wb.depth_proxy[p]), weights.tau_d);
        } else {
            t.e3 += weights.tau_c;
            t.e4 += weights.tau_d;
        }
        const int x = static_cast<int>(p % static_cast<std::size_t>(width));
        const int y = static_cast<int>(p / static_cast<std::size_t>(width));
        t.e5 += (gradient(wa, x, y, 1, 0) - gradient(wb, x, y, 1, 0)).cwiseAbs().sum() +
                (gradient(wa, x, y, 0, 1) - gradient(wb, x, y, 0, 1)).cwiseAbs().sum();
    }
    return t;
}

double pairwise_cost(std::size_t i, std::size_t j, std::size_t a, std::size_t b, std::span<const WarpedView> warps,
                     const EnergyWeights& weights)
{
    const PairwiseTerms t = pairwise_terms(i, j, a, b, warps, weights);
    return weights.lambda3 * t.e3 + weights.lambda4 * t.e4 + weights.lambda5 * t.e5;
}

StitchProblem build_stitch_problem(std::span<const WarpedView> warps, std::span<const Pose> ref_poses,
                                   const Camera& target, const EnergyWeights& weights)
{
    const UnaryCosts unary = unary_costs(warps, ref_poses, target, weights);
    const std::size_t k = warps.size();
    StitchProblem prob;
    prob.width = unary.width;
    prob.height = unary.height;
    prob.num_candidates = k;
    prob.hole = Mask(unary.width, unary.height, 0);
    prob.node_of_pixel.assign(prob.hole.size(), -1);
    for (std::size_t p = 0; p < prob.hole.size(); ++p) {
        bool any = false;
        for (std::size_t j = 0; j < k; ++j)
            any = any || std::isfinite(unary.at(p, j));
        if (any) {
            prob.node_of_pixel[p] = static_cast<std::ptrdiff_t>(prob.pixel_of_node.size());
            prob.pixel_of_node.push_back(p);
        } else {
            prob.hole[p] = 1;
        }
    }
    prob.mrf = Mrf(prob.pixel_of_node.size(), k);
    for (std::size_t n = 0; n < prob.pixel_of_node.size(); ++n)
        for (std::size_t j = 0; j < k; ++j)
            prob.mrf.unary_at(n, j) = unary.at(prob.pixel_of_node[n], j);
    std::vector<double> table(k * k);
    for (int y = 0; y < prob.height; ++y) {
        for (int x = 0; x < prob.width; ++x) {
            const std::size_t p = prob.hole.index(x, y);
            if (prob.hole[p])
                continue;
            for (const auto& [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
                if (!prob.hole.contains(x + dx, y + dy))
                    continue;
                const std::size_t q = prob.hole.index(x + dx, y + dy);
                if (prob.hole[q])
                    continue;
                for (std::size_t a = 0; a < k; ++a)
                    for (std::size_t b = 0; b < k; ++b)
                        table[a * k + b] = pairwise_cost(p, q, a, b, warps, weights);
                prob.mrf.add_edge(static_cast<std::size_t>(prob.node_of_pixel[p]),
                                  static_cast<std::size_t>(prob.node_of_pixel[q]), table);
            }
        }
    }
    return prob;
}

Labeling trws_solve(const StitchProblem& problem, const TrwsOptions& options)
{
    const TrwsResult r = trws_solve(problem.mrf, options);
    Labeling out;
    out.candidate = LabelRaster(problem.width, problem.height, 0);
    out.hole = problem.hole;
    for (std::size_t n = 0; n < r.labels.size(); ++n)
        out.candidate[problem.pixel_of_node[n]] = static_cast<std::uint16_t>(r.labels[n]);
    out.energy = r.energy;
    out.lower_bound = r.lower_bound;
    out.bound_history = r.bound_history;
    return out;
}

double stitch_energy(const LabelRaster& candidate, const Mask& hole, std::span<const WarpedView> warps,
                     std::span<const Pose> ref_poses, const Camera& target, const EnergyWeights& weights)
{
    const UnaryCosts unary = unary_costs(warps, ref_poses, target, weights);
    double e = 0.0;
    for (int y = 0; y < candidate.height(); ++y) {
        for (int x = 0; x < candidate.width(); ++x) {
            const std::size_t p = candidate.index(x, y);
            if (hole[p])
                continue;
            e += unary.at(p, candidate[p]);
            if (x + 1 < candidate.width() && !hole[p + 1])
                e += pairwise_cost(p, p + 1, candidate[p], candidate[p + 1], warps, weights);
            const std::size_t below = p + static_cast<std::size_t>(candidate.width());
            if (y + 1 < candidate.height() && !hole[below])
                e += pairwise_cost(p, below, candidate[p], candidate[below], warps, weights);
        }
    }
    return e;
}

// ---------------------------------------------------------------------------------------------
// Blending

ImageRaster compose_mosaic(const Labeling& labeling, std::span<const WarpedView> warps)
{
    check_warps(warps);
    ImageRaster mosaic(labeling.candidate.width(), labeling.candidate.height(), Rgb::Zero());
    for (std::size_t p = 0; p < mosaic.size(); ++p)
        if (!labeling.hole[p])
            mosaic[p] = warps[labeling.candidate[p]].color[p];
    return mosaic;
}

ImageRaster poisson_blend(const ImageRaster& mosaic, const Labeling& labeling, std::span<const WarpedView> warps,
                          std::size_t nearest_ref, const BlendOptions& options)
{
    check_warps(warps);
    if (!mosaic.same_shape(labeling.candidate) || !mosaic.same_shape(labeling.hole) ||
        !mosaic.same_shape(warps[0].color))
        throw std::invalid_argument("poisson_blend: raster sizes differ");
    if (!(options.screen > 0.0))
        throw std::invalid_argument("poisson_blend: screen weight must be positive");
    const int w = mosaic.width();
    const int h = mosaic.height();
    const auto& cand = labeling.candidate;
    const auto& hole = labeling.hole;
    if (std::all_of(hole.values().begin(), hole.values().end(), [](std::uint8_t v) { return v != 0; }))
        return mosaic;

    // Guidance for u(q) - u(p) along the right (0) and down (1) edge of every pixel.
    std::vector<Rgb> guide(mosaic.size() * 2, Rgb::Zero());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = mosaic.index(x, y);
            for (int dir = 0; dir < 2; ++dir) {
                const int qx = x + (dir == 0);
                const int qy = y + (dir == 1);
                if (!mosaic.contains(qx, qy))
                    continue;
                const std::size_t q = mosaic.index(qx, qy);
                if (hole[p] || hole[q])
                    continue;
                const std::size_t sources[2] = {cand[p], cand[q]};
                const int distinct = sources[0] == sources[1] ? 1 : 2;
                Rgb sum = Rgb::Zero();
                int count = 0;
                for (int s = 0; s < distinct; ++s) {
                    const WarpedView& src = warps[sources[s]];
                    if (visible(src, p) && visible(src, q)) {
                        sum += src.color[q] - src.color[p];
                        ++count;
                    }
                }
                // No source sees both pixels (typically an occlusion edge): keep the mosaic jump.
                guide[p * 2 + static_cast<std::size_t>(dir)] = count > 0 ? Rgb(sum / count) : Rgb(mosaic[q] - mosaic[p]);
            }
        }
    }

    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    Mask fixed(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = mosaic.index(x, y);
            if (hole[p] || cand[p] != nearest_ref)
                continue;
            for (int n = 0; n < 4; ++n) {
                if (!mosaic.contains(x + dx[n], y + dy[n]))
                    continue;
                const std::size_t q = mosaic.index(x + dx[n], y + dy[n]);
                if (hole[q] || cand[q] != nearest_ref)
                    fixed[p] = 1;
            }
        }
    }

    std::vector<std::ptrdiff_t> var(mosaic.size(), -1);
    std::vector<std::size_t> pixel_of_var;
    for (std::size_t p = 0; p < mosaic.size(); ++p)
        if (!fixed[p]) {
            var[p] = static_cast<std::ptrdiff_t>(pixel_of_var.size());
            pixel_of_var.push_back(p);
        }
    const auto nv = static_cast<Eigen::Index>(pixel_of_var.size());
    ImageRaster out = mosaic;
    if (nv == 0)
        return out;

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nv, 3);
    for (Eigen::Index r = 0; r < nv; ++r) {
        const std::size_t p = pixel_of_var[static_cast<std::size_t>(r)];
        const int x = static_cast<int>(p % static_cast<std::size_t>(w));
        const int y = static_cast<int>(p / static_cast<std::size_t>(w));
        double diag = hole[p] ? 0.0 : options.screen;
        if (!hole[p])
            rhs.row(r) += options.screen * mosaic[p].transpose();
        for (int n = 0; n < 4; ++n) {
            const int qx = x + dx[n];
            const int qy = y + dy[n];
            if (!mosaic.contains(qx, qy))
                continue;
            const std::size_t q = mosaic.index(qx, qy);
            diag += 1.0;
            // Guidance for u(q) - u(p).
            const Rgb g = n == 0 ? guide[p * 2] : n == 2 ? guide[p * 2 + 1] : n == 1 ? Rgb(-guide[q * 2])
                                                                                     : Rgb(-guide[q * 2 + 1]);
            rhs.row(r) -= g.transpose();
            if (var[q] >= 0)
                trip.emplace_back(r, var[q], -1.0);
            else
                rhs.row(r) += mosaic[q].transpose();
        }
        trip.emplace_back(r, r, diag);
    }
    Eigen::SparseMatrix<double> a(nv, nv);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(options.tolerance);
    cg.setMaxIterations(options.max_iter);
    cg.compute(a);
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd guess(nv);
        for (Eigen::Index r = 0; r < nv; ++r)
            guess[r] = mosaic[pixel_of_var[static_cast<std::size_t>(r)]][c];
        const Eigen::VectorXd u = cg.solveWithGuess(rhs.col(c), guess);
        if (cg.info() != Eigen::Success)
            throw NumericalError("poisson_blend: conjugate gradient did not converge");
        if ((a * u - rhs.col(c)).cwiseAbs().maxCoeff() > 1e-6)
            throw NumericalError("poisson_blend: residual above 1e-6");
        for (Eigen::Index r = 0; r < nv; ++r)
            out[pixel_of_var[static_cast<std::size_t>(r)]][c] = u[r];
    }
    for (auto& px : out.values())
        px = px.cwiseMax(0.0).cwiseMin(1.0);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Orchestration

StitchConfig StitchConfig::from_json(const nlohmann::json& j)
{
    const std::string where = "stitch config";
    config::check_keys(j, {"weights", "warp", "trws", "blend"}, where);
    StitchConfig c;
    if (j.contains("weights"))
        c.weights = EnergyWeights::from_json(j.at("weights"));
    if (j.contains("warp"))
        c.warp = WarpConfig::from_json(j.at("warp"));
    if (j.contains("trws")) {
        const auto& t = j.at("trws");
        config::check_keys(t, {"max_iter", "bound_tol"}, "trws");
        config::read_opt(t, "max_iter", c.trws.max_iter, "trws");
        config::read_opt(t, "bound_tol", c.trws.bound_tol, "trws");
        if (c.trws.max_iter < 1)
            throw ParseError("trws: max_iter must be at least 1");
    }
    if (j.contains("blend")) {
        const auto& b = j.at("blend");
        config::check_keys(b, {"screen", "tolerance", "max_iter"}, "blend");
        config::read_opt(b, "screen", c.blend.screen, "blend");
        config::read_opt(b, "tolerance", c.blend.tolerance, "blend");
        config::read_opt(b, "max_iter", c.blend.max_iter, "blend");
        if (!(c.blend.screen > 0.0))
            throw ParseError("blend: screen must be positive");
    }
    return c;
}

nlohmann::json StitchConfig::to_json() const
{
    return {{"weights", weights.to_json()},
            {"warp", warp.to_json()},
            {"trws", {{"max_iter", trws.max_iter}, {"bound_tol", trws.bound_tol}}},
            {"blend", {{"screen", blend.screen}, {"tolerance", blend.tolerance}, {"max_iter", blend.max_iter}}}};
}

SynthesizedView synthesize_view(const Camera& target, std::span<const ViewSample> dataset, const StitchConfig& config)
{
    if (dataset.empty())
        throw std::invalid_argument("synthesize_view: empty dataset");
    config.weights.validate();
    config.warp.validate();
    SynthesizedView out;
    out.references = select_references(target.pose, dataset, config.warp.reference_count, config.warp.angle_weight);
    std::vector<Pose> poses;
    for (std::size_t idx : out.references) {
        out.warps.push_back(warp_reference(dataset[idx], idx, target, config.warp));
        poses.push_back(dataset[idx].camera.pose);
    }
    const StitchProblem problem = build_stitch_problem(out.warps, poses, target, config.weights);
    out.labeling = trws_solve(problem, config.trws);
    out.image = poisson_blend(compose_mosaic(out.labeling, out.warps), out.labeling, out.warps, 0, config.blend);

    const auto& k = target.intrinsics;
    out.depth = DepthMap(k.width(), k.height(), kInvalidDepth);
    out.provenance = LabelRaster(k.width(), k.height(), kNoSource);
    for (std::size_t p = 0; p < out.depth.size(); ++p) {
        if (out.labeling.hole[p])
            continue;
        const WarpedView& w = out.warps[out.labeling.candidate[p]];
        out.depth[p] = w.depth_proxy[p];
        out.provenance[p] = static_cast<std::uint16_t>(w.source_index);
    }
    return out;
}

} // namespace aads
