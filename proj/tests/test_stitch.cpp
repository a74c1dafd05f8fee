#include "doctest.h"

#include "aads/errors.hpp"
#include "aads/stitch.hpp"
#include "aads/synthetic_scene.hpp"
#include "mrf_instances.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <numeric>
#include <random>

using namespace aads;
using test::grid_edges;
using test::random_mrf;
using test::random_tree;
using test::PairwiseFamily;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

WarpedView constant_warp(int w, int h, const Rgb& color, double depth, std::size_t source = 0)
{
    return {ImageRaster(w, h, color), DepthMap(w, h, depth), Mask(w, h, 0), source};
}

std::vector<ViewSample> street_dataset(const SyntheticScene& scene, int w = 96, int h = 72, double f = 90.0)
{
    std::vector<ViewSample> views;
    const std::vector<std::pair<Vec3, double>> rig{
        {Vec3(0, -0.8, 1.6), 0.06}, {Vec3(0, 0.8, 1.6), -0.06}, {Vec3(1.5, -0.4, 1.7), 0.03},
        {Vec3(1.5, 0.6, 1.5), -0.04}, {Vec3(3.0, 0.0, 1.6), 0.0}};
    for (const auto& [eye, yaw] : rig)
        views.push_back(scene.tracer.render_view(test::street_camera(eye, yaw, w, h, f), 2));
    return views;
}

double psnr(const ImageRaster& a, const ImageRaster& b, const Mask* skip = nullptr)
{
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (skip && (*skip)[i])
            continue;
        sq += (a[i] - b[i]).squaredNorm() / 3.0;
        ++n;
    }
    const double mse = sq / static_cast<double>(n);
    return mse == 0.0 ? kInf : 10.0 * std::log10(1.0 / mse);
}

} // namespace

TEST_CASE("energy weight defaults")
{
    const EnergyWeights w;
    CHECK(w.lambda1 == 200.0);
    CHECK(w.lambda2 == 1.0);
    CHECK(w.lambda3 == 200.0);
    CHECK(w.lambda4 == 100.0);
    CHECK(w.lambda5 == 50.0);
    CHECK(w.tau_c == 0.5);
    CHECK(w.tau_d == 5.0);
    CHECK(w.angle_hook == 0.01);
    CHECK(EnergyWeights::from_json(nlohmann::json::object()).to_json() == w.to_json());
    CHECK(EnergyWeights::from_json(nlohmann::json{{"lambda3", 7.0}}).lambda3 == 7.0);
    CHECK_THROWS_AS(EnergyWeights::from_json(nlohmann::json{{"lambda6", 1.0}}), ParseError);
    CHECK_THROWS_AS(EnergyWeights::from_json(nlohmann::json{{"tau_c", 0.0}}), ParseError);
}

TEST_CASE("trws on trivial problems")
{
    SUBCASE("single node takes the argmin, lowest index on ties")
    {
        Mrf mrf(1, 4);
        mrf.unary = {3.0, 1.0, 1.0, 2.0};
        const TrwsResult r = trws_solve(mrf);
        CHECK(r.labels == std::vector<std::size_t>{1});
        CHECK(r.energy == 1.0);
        CHECK(r.lower_bound <= 1.0);
        CHECK(r.lower_bound >= 1.0 - 1e-6);
    }
    SUBCASE("forbidden labels are never chosen")
    {
        Mrf mrf(2, 2);
        mrf.unary = {kInf, 5.0, 0.0, 0.0};
        mrf.add_edge(0, 1, {0.0, 0.0, 0.0, 100.0});
        const TrwsResult r = trws_solve(mrf);
        CHECK(r.labels == std::vector<std::size_t>{1, 0});
        CHECK(r.energy == 5.0);
    }
    SUBCASE("invalid problems are rejected")
    {
        Mrf mrf(1, 2);
        mrf.unary = {kInf, kInf};
        CHECK_THROWS_AS(trws_solve(mrf), std::invalid_argument);
        mrf.unary = {std::nan(""), 0.0};
        CHECK_THROWS_AS(trws_solve(mrf), std::invalid_argument);
    }
}

TEST_CASE("trws is exact on chains and trees")
{
    std::mt19937_64 rng(7);
    int instances = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
        const std::size_t labels = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
        const bool chain = t % 2 == 0;
        const bool integer = t % 4 < 2;
        const Mrf mrf = random_mrf(rng, n, labels, random_tree(rng, n, chain), integer,
                                    PairwiseFamily::General, t % 5 == 0 ? 0.2 : 0.0);
        const TrwsResult r = trws_solve(mrf);
        const oracle::Enumerated best = oracle::enumerate_mrf(mrf);
        INFO("instance ", t, " n=", n, " labels=", labels);
        if (integer)
            CHECK(r.energy == best.energy);
        else
            CHECK(std::abs(r.energy - best.energy) <= 1e-9);
        CHECK(r.lower_bound <= best.energy + 1e-9);
        CHECK(mrf_energy(mrf, r.labels) == r.energy);
        ++instances;
    }
    CHECK(instances == 200);
}

TEST_CASE("trws on 3x3 grids: bound <= optimum <= energy")
{
    std::mt19937_64 rng(11);
    const auto edges = grid_edges(3, 3);
    for (int t = 0; t < 50; ++t) {
        const Mrf mrf = random_mrf(rng, 9, 3, edges, t % 2 == 0);
        const TrwsResult r = trws_solve(mrf);
        const oracle::Enumerated best = oracle::enumerate_mrf(mrf);
        INFO("grid ", t);
        CHECK(r.lower_bound <= best.energy + 1e-9);
        CHECK(best.energy <= r.energy + 1e-9);
        for (std::size_t k = 1; k < r.bound_history.size(); ++k)
            CHECK(r.bound_history[k] >= r.bound_history[k - 1] - 1e-9 * std::abs(r.bound_history[k - 1]));
    }
}

TEST_CASE("trws on seam-like 3x3 grids is no worse than ICM")
{
    std::mt19937_64 rng(11);
    const auto edges = grid_edges(3, 3);
    for (int t = 0; t < 50; ++t) {
        const Mrf mrf = random_mrf(rng, 9, 3, edges, false, PairwiseFamily::Seam);
        const TrwsResult r = trws_solve(mrf);
        const oracle::Enumerated best = oracle::enumerate_mrf(mrf);
        const auto icm = icm_solve(mrf, std::vector<std::size_t>(9, 0));
        INFO("grid ", t);
        CHECK(r.lower_bound <= best.energy + 1e-9);
        CHECK(best.energy <= r.energy + 1e-9);
        CHECK(r.energy <= mrf_energy(mrf, icm) + 1e-9);
    }
}

TEST_CASE("icm reaches a local minimum")
{
    std::mt19937_64 rng(3);
    const Mrf mrf = random_mrf(rng, 16, 3, grid_edges(4, 4), false);
    const auto labels = icm_solve(mrf, std::vector<std::size_t>(16, 0));
    const double e = mrf_energy(mrf, labels);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t l = 0; l < 3; ++l) {
            auto alt = labels;
            alt[i] = l;
            CHECK(mrf_energy(mrf, alt) >= e);
        }
}

TEST_CASE("unary costs")
{
    const CameraIntrinsics k = test::square_camera(20, 20.0);
    const Camera target{k, Pose::identity()};
    const EnergyWeights w;

    SUBCASE("coincident reference costs nothing")
    {
        const std::vector<WarpedView> warps{constant_warp(20, 20, Rgb::Zero(), 10.0)};
        const std::vector<Pose> poses{Pose::identity()};
        const UnaryCosts u = unary_costs(warps, poses, target, w);
        for (double c : u.cost)
            CHECK(c == 0.0);
    }
    SUBCASE("occluded candidate is infinite")
    {
        std::vector<WarpedView> warps{constant_warp(20, 20, Rgb::Zero(), 10.0)};
        warps[0].occlusion(3, 4) = 1;
        warps[0].depth_proxy(3, 4) = kInvalidDepth;
        const std::vector<Pose> poses{Pose(test::ypr(0, 0.1, 0), Vec3(1, 0, 0))};
        const UnaryCosts u = unary_costs(warps, poses, target, w);
        CHECK(u.at(warps[0].color.index(3, 4), 0) == kInf);
        CHECK(std::isfinite(u.at(0, 0)));
        CHECK(u.at(0, 0) > 0.0);
    }
    SUBCASE("mirror-symmetric references cost the same on the bisector")
    {
        const std::vector<Pose> poses{Pose(Eigen::AngleAxisd(-0.1, Vec3::UnitY()).toRotationMatrix(), Vec3(1, 0, 0)),
                                      Pose(Eigen::AngleAxisd(0.1, Vec3::UnitY()).toRotationMatrix(), Vec3(-1, 0, 0))};
        // The plane x = 0 is the bisector; pixel column 10 sees it with cx = 10.
        const std::vector<WarpedView> odd{constant_warp(21, 20, Rgb::Zero(), 10.0),
                                          constant_warp(21, 20, Rgb::Zero(), 10.0)};
        const UnaryCosts v = unary_costs(odd, poses, Camera{CameraIntrinsics(20, 20, 10, 9.5, 21, 20), {}}, w);
        for (int y = 0; y < 20; ++y) {
            const std::size_t p = static_cast<std::size_t>(y) * 21 + 10;
            CHECK(v.at(p, 0) == doctest::Approx(v.at(p, 1)).epsilon(1e-12));
        }
    }
    SUBCASE("hook floors the view angle")
    {
        const std::vector<WarpedView> warps{constant_warp(20, 20, Rgb::Zero(), 1e6)};
        const Pose ref(test::ypr(0, 0.2, 0), Vec3(1e-3, 0, 0));
        const std::vector<Pose> poses{ref};
        const UnaryCosts u = unary_costs(warps, poses, target, w);
        const double w_label = 1e-3 * 0.2;
        CHECK(u.at(0, 0) == doctest::Approx(200.0 * 0.01 * w_label).epsilon(1e-9));
    }
}

TEST_CASE("pairwise cost terms")
{
    const EnergyWeights w;
    SUBCASE("identical candidates")
    {
        const std::vector<WarpedView> warps{constant_warp(4, 4, Rgb(0.2, 0.4, 0.6), 7.0),
                                            constant_warp(4, 4, Rgb(0.2, 0.4, 0.6), 7.0)};
        const PairwiseTerms t = pairwise_terms(5, 6, 0, 1, warps, w);
        CHECK(t.e3 == 0.0);
        CHECK(t.e4 == 0.0);
        CHECK(t.e5 == 0.0);
    }
    SUBCASE("saturated colour and depth differences hit the truncation")
    {
        const std::vector<WarpedView> warps{constant_warp(4, 4, Rgb::Zero(), 2.0),
                                            constant_warp(4, 4, Rgb::Ones(), 12.0)};
        const PairwiseTerms t = pairwise_terms(5, 9, 0, 1, warps, w);
        CHECK(t.e3 == 1.0);
        CHECK(t.e4 == 10.0);
        CHECK(t.e5 == 0.0);
        CHECK(pairwise_cost(5, 9, 0, 1, warps, w) == 200.0 * 1.0 + 100.0 * 10.0);
        CHECK(pairwise_cost(5, 9, 1, 1, warps, w) == 0.0);
    }
    SUBCASE("gradient term with forward differences and replicated border")
    {
        std::vector<WarpedView> warps{constant_warp(3, 1, Rgb::Zero(), 5.0), constant_warp(3, 1, Rgb::Zero(), 5.0)};
        warps[1].color(1, 0) = Rgb(0.1, 0.0, 0.0);
        // Pixels 1 and 2: candidate 1 has gx(1) = -0.1 and gx(2) = 0 (border); gx(0) not involved.
        const PairwiseTerms t = pairwise_terms(1, 2, 0, 1, warps, w);
        CHECK(t.e5 == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(t.e3 == doctest::Approx(0.01).epsilon(1e-12));
    }
}

TEST_CASE("stitching energy and labeling properties")
{
    const SyntheticScene scene = make_synthetic_scene(demo_scene());
    const auto dataset = street_dataset(scene, 48, 36, 45.0);
    const Camera target = test::street_camera(Vec3(0.8, 0.3, 1.6), 0.02, 48, 36, 45.0);
    std::vector<WarpedView> warps;
    std::vector<Pose> poses;
    for (std::size_t i = 0; i < 4; ++i) {
        warps.push_back(warp_reference(dataset[i], i, target, WarpConfig{}));
        poses.push_back(dataset[i].camera.pose);
    }
    const EnergyWeights w;
    const StitchProblem prob = build_stitch_problem(warps, poses, target, w);
    const Labeling lab = trws_solve(prob);

    for (std::size_t p = 0; p < lab.candidate.size(); ++p) {
        if (lab.hole[p]) {
            for (const auto& wv : warps)
                CHECK(wv.occlusion[p] == 1);
            continue;
        }
        CHECK(warps[lab.candidate[p]].occlusion[p] == 0);
    }
    const double recomputed = stitch_energy(lab.candidate, lab.hole, warps, poses, target, w);
    CHECK(std::abs(recomputed - lab.energy) <= 1e-6);
    CHECK(lab.lower_bound <= lab.energy + 1e-6);
    for (std::size_t k = 1; k < lab.bound_history.size(); ++k)
        CHECK(lab.bound_history[k] >= lab.bound_history[k - 1] - 1e-9 * std::abs(lab.bound_history[k - 1]));

    SUBCASE("scaling every lambda scales the energy and keeps the labeling")
    {
        const Labeling scaled = trws_solve(build_stitch_problem(warps, poses, target, w.scaled(4.0)));
        CHECK(scaled.candidate == lab.candidate);
        CHECK(scaled.energy == doctest::Approx(4.0 * lab.energy).epsilon(1e-12));
    }
}

TEST_CASE("stitching optimum on a tiny problem matches enumeration")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<WarpedView> warps;
    for (std::size_t j = 0; j < 3; ++j) {
        WarpedView wv = constant_warp(3, 3, Rgb::Zero(), 10.0, j);
        for (std::size_t p = 0; p < 9; ++p) {
            wv.color[p] = Rgb(u(rng), u(rng), u(rng));
            wv.depth_proxy[p] = 8.0 + 4.0 * u(rng);
        }
        warps.push_back(wv);
    }
    warps[2].occlusion[4] = 1;
    warps[2].depth_proxy[4] = kInvalidDepth;
    const Camera target{test::square_camera(3, 3.0), Pose::identity()};
    const std::vector<Pose> poses{Pose(test::ypr(0.1, 0, 0), Vec3(0.3, 0, 0)),
                                  Pose(test::ypr(0, 0.2, 0), Vec3(-0.5, 0, 0)),
                                  Pose(test::ypr(0, 0, 0.3), Vec3(0, 0.4, 0))};
    for (double scale : {1.0, 0.01}) {
        EnergyWeights w;
        w.lambda3 *= scale;
        w.lambda4 *= scale;
        w.lambda5 *= scale;
        const StitchProblem prob = build_stitch_problem(warps, poses, target, w);
        const Labeling lab = trws_solve(prob);
        const oracle::Enumerated best = oracle::enumerate_mrf(prob.mrf);
        CHECK(lab.lower_bound <= best.energy + 1e-9);
        CHECK(best.energy <= lab.energy + 1e-9);
        CHECK(lab.candidate[4] != 2);
    }
}

TEST_CASE("poisson_blend")
{
    SUBCASE("single-source labeling reproduces that candidate")
    {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        WarpedView a = constant_warp(12, 10, Rgb::Zero(), 5.0);
        for (auto& c : a.color.values())
            c = Rgb(u(rng), u(rng), u(rng));
        const std::vector<WarpedView> warps{constant_warp(12, 10, Rgb::Constant(0.3), 5.0), a};
        Labeling lab{LabelRaster(12, 10, 1), Mask(12, 10, 0), 0.0, 0.0, {}};
        const ImageRaster mosaic = compose_mosaic(lab, warps);
        const ImageRaster out = poisson_blend(mosaic, lab, warps, 0);
        for (std::size_t i = 0; i < out.size(); ++i)
            CHECK((out[i] - a.color[i]).cwiseAbs().maxCoeff() <= 1e-6);
        // Idempotent.
        const ImageRaster again = poisson_blend(out, lab, warps, 0);
        for (std::size_t i = 0; i < out.size(); ++i)
            CHECK((again[i] - out[i]).cwiseAbs().maxCoeff() <= 1e-6);
    }
    SUBCASE("two constant halves match a dense solve")
    {
        const int w = 24;
        const int h = 16;
        const Rgb c1(0.2, 0.5, 0.8);
        const Rgb c2(0.7, 0.3, 0.1);
        const std::vector<WarpedView> warps{constant_warp(w, h, c1, 5.0), constant_warp(w, h, c2, 5.0)};
        Labeling lab{LabelRaster(w, h, 0), Mask(w, h, 0), 0.0, 0.0, {}};
        for (int y = 0; y < h; ++y)
            for (int x = w / 2; x < w; ++x)
                lab.candidate(x, y) = 1;
        const ImageRaster mosaic = compose_mosaic(lab, warps);
        const BlendOptions opts;
        const ImageRaster out = poisson_blend(mosaic, lab, warps, 0, opts);

        Mask unknown(w, h, 1);
        for (int y = 0; y < h; ++y)
            unknown(w / 2 - 1, y) = 0;
        for (int c = 0; c < 3; ++c) {
            Raster<double> values(w, h), target(w, h);
            for (std::size_t i = 0; i < values.size(); ++i)
                values[i] = target[i] = mosaic[i][c];
            const Raster<double> dense = oracle::dense_laplace(values, unknown, nullptr, opts.screen, &target);
            for (std::size_t i = 0; i < values.size(); ++i)
                CHECK(std::abs(out[i][c] - dense[i]) <= 1e-5);
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w / 2; ++x)
                CHECK((out(x, y) - c1).cwiseAbs().maxCoeff() <= 1e-6);
            for (int x = w / 2; x + 1 < w; ++x)
                CHECK((out(x + 1, y) - out(x, y)).dot(c2 - c1) >= -1e-12);
        }
    }
    SUBCASE("hole surrounded by a constant colour is filled with it")
    {
        const Rgb c(0.4, 0.6, 0.2);
        std::vector<WarpedView> warps{constant_warp(10, 10, c, 5.0)};
        Labeling lab{LabelRaster(10, 10, 0), Mask(10, 10, 0), 0.0, 0.0, {}};
        for (int y = 3; y < 7; ++y)
            for (int x = 3; x < 7; ++x) {
                lab.hole(x, y) = 1;
                warps[0].occlusion(x, y) = 1;
            }
        const ImageRaster out = poisson_blend(compose_mosaic(lab, warps), lab, warps, 0);
        for (const auto& px : out.values())
            CHECK((px - c).cwiseAbs().maxCoeff() <= 1e-6);
    }
    SUBCASE("output stays within the data range")
    {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int t = 0; t < 20; ++t) {
            std::vector<WarpedView> warps{constant_warp(8, 8, Rgb::Constant(u(rng)), 5.0),
                                          constant_warp(8, 8, Rgb::Constant(u(rng)), 5.0)};
            Labeling lab{LabelRaster(8, 8, 0), Mask(8, 8, 0), 0.0, 0.0, {}};
            for (auto& l : lab.candidate.values())
                l = u(rng) < 0.5 ? 0 : 1;
            const double lo = std::min(warps[0].color[0][0], warps[1].color[0][0]);
            const double hi = std::max(warps[0].color[0][0], warps[1].color[0][0]);
            const ImageRaster out = poisson_blend(compose_mosaic(lab, warps), lab, warps, 0);
            for (const auto& px : out.values()) {
                CHECK(px[0] >= lo - 1e-9);
                CHECK(px[0] <= hi + 1e-9);
            }
        }
    }
}

TEST_CASE("synthesize_view")
{
    const SyntheticScene scene = make_synthetic_scene(demo_scene());
    const auto dataset = street_dataset(scene);
    CHECK_THROWS_AS(synthesize_view(dataset[0].camera, std::span<const ViewSample>()), std::invalid_argument);

    SUBCASE("at a reference pose")
    {
        const SynthesizedView v = synthesize_view(dataset[2].camera, dataset);
        CHECK(v.references[0] == 2);
        Mask skip(v.image.width(), v.image.height(), 0);
        for (std::size_t i = 0; i < skip.size(); ++i)
            skip[i] = v.labeling.hole[i] || !is_valid_depth(dataset[2].depth[i]);
        CHECK(psnr(v.image, dataset[2].image, &skip) >= 40.0);
    }
    SUBCASE("provenance and depth follow the labeling")
    {
        const Camera target = test::street_camera(Vec3(0.7, 0.2, 1.6), 0.01);
        const SynthesizedView v = synthesize_view(target, dataset);
        CHECK(is_normalized(v.image));
        for (std::size_t p = 0; p < v.image.size(); ++p) {
            if (v.labeling.hole[p]) {
                CHECK(v.provenance[p] == kNoSource);
                continue;
            }
            CHECK(v.provenance[p] == v.references[v.labeling.candidate[p]]);
            CHECK(v.depth[p] == v.warps[v.labeling.candidate[p]].depth_proxy[p]);
        }
    }
}

TEST_CASE("stitch config JSON")
{
    const StitchConfig c;
    CHECK(StitchConfig::from_json(c.to_json()).to_json() == c.to_json());
    CHECK_THROWS_AS(StitchConfig::from_json(nlohmann::json{{"trws", {{"max_iter", 0}}}}), ParseError);
    CHECK_THROWS_AS(StitchConfig::from_json(nlohmann::json{{"bogus", 1}}), ParseError);
}
