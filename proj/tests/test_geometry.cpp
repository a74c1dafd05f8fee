#include "doctest.h"

#include "aads/geometry.hpp"
#include "test_util.hpp"

#include <random>

using namespace aads;

TEST_CASE("project: principal axis and pinhole scaling")
{
    const auto k = test::square_camera();
    const auto p = project(Vec3(0, 0, 1), k, Pose::identity());
    REQUIRE(p);
    CHECK(p->pixel.x() == doctest::Approx(50));
    CHECK(p->pixel.y() == doctest::Approx(50));
    CHECK(p->depth == doctest::Approx(1));

    CHECK_FALSE(project(Vec3(1, 0, 1), k, Pose::identity()));
    const auto u = project_unclipped(Vec3(1, 0, 1), k, Pose::identity());
    REQUIRE(u);
    CHECK(u->pixel.x() == doctest::Approx(150));
    CHECK(u->pixel.y() == doctest::Approx(50));

    CHECK_FALSE(project(Vec3(0, 0, -1), k, Pose::identity()));
    CHECK_FALSE(project(Vec3(0, 0, 0), k, Pose::identity()));
}

TEST_CASE("unproject: axis ray and invalid depth")
{
    const auto k = test::square_camera();
    const Vec3 p = unproject(Vec2(50, 50), 2.0, k, Pose::identity());
    CHECK((p - Vec3(0, 0, 2)).norm() < 1e-12);

    std::mt19937_64 rng(3);
    const Pose pose = test::random_pose(rng);
    const Vec3 q = unproject(Vec2(k.cx(), k.cy()), 7.5, k, pose);
    CHECK((q - (pose.center() + 7.5 * pose.optical_axis())).norm() < 1e-12);

    CHECK_THROWS_AS(unproject(Vec2(1, 1), 0.0, k, pose), std::invalid_argument);
    CHECK_THROWS_AS(unproject(Vec2(1, 1), -1.0, k, pose), std::invalid_argument);
    CHECK_THROWS_AS(unproject(Vec2(1, 1), kInvalidDepth, k, pose), std::invalid_argument);
}

TEST_CASE("project/unproject round trips on random poses")
{
    std::mt19937_64 rng(11);
    const CameraIntrinsics k(320.0, 300.0, 159.5, 119.5, 320, 240);
    std::uniform_real_distribution<double> px(-0.5, 319.49);
    std::uniform_real_distribution<double> py(-0.5, 239.49);
    std::uniform_real_distribution<double> dz(0.1, 200.0);
    double worst_world = 0.0;
    double worst_pixel = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Pose pose = test::random_pose(rng);
        const Vec2 pix(px(rng), py(rng));
        const double d = dz(rng);
        const Vec3 w = unproject(pix, d, k, pose);
        const auto back = project(w, k, pose);
        REQUIRE(back);
        worst_pixel = std::max(worst_pixel, (back->pixel - pix).norm());
        CHECK(std::abs(back->depth - d) < 1e-9 * std::max(1.0, d));
        const Vec3 again = unproject(back->pixel, back->depth, k, pose);
        worst_world = std::max(worst_world, (again - w).norm());
    }
    CHECK(worst_pixel < 1e-9);
    CHECK(worst_world < 1e-9);
}

TEST_CASE("pose algebra")
{
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const Pose a = test::random_pose(rng);
        const Pose b = test::random_pose(rng);
        const Pose c = test::random_pose(rng);
        const Pose l = (a * b) * c;
        const Pose r = a * (b * c);
        CHECK((l.rotation() - r.rotation()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((l.translation() - r.translation()).norm() < 1e-9);
        const Pose id = a * a.inverse();
        CHECK((id.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(id.translation().norm() < 1e-9);
        const Vec3 p(1.0, -2.0, 3.5);
        CHECK((a.to_camera(a.to_world(p)) - p).norm() < 1e-9);
    }
}

TEST_CASE("invariants are enforced at construction")
{
    CHECK_THROWS_AS(CameraIntrinsics(0.0, 1.0, 1, 1, 4, 4), std::invalid_argument);
    CHECK_THROWS_AS(CameraIntrinsics(1.0, 1.0, 4.0, 1, 4, 4), std::invalid_argument);
    CHECK_THROWS_AS(CameraIntrinsics(1.0, 1.0, 1.0, -0.1, 4, 4), std::invalid_argument);
    Mat3 reflect = Mat3::Identity();
    reflect(0, 0) = -1;
    CHECK_THROWS_AS(Pose(reflect, Vec3::Zero()), std::invalid_argument);
    CHECK_THROWS_AS(Pose(2.0 * Mat3::Identity(), Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("look_at follows the +z forward, +y down convention")
{
    const Pose p = Pose::look_at(Vec3(0, 0, 0), Vec3(10, 0, 0), Vec3(0, 0, 1));
    CHECK((p.optical_axis() - Vec3(1, 0, 0)).norm() < 1e-12);
    CHECK((p.rotation().col(1) - Vec3(0, 0, -1)).norm() < 1e-12);
    const auto k = test::square_camera(101);
    const auto up = project(Vec3(10, 0, 1), k, p);
    REQUIRE(up);
    CHECK(up->pixel.y() < k.cy());
}
