#include "aads/geometry.hpp"

#include <Eigen/LU>

#include <algorithm>

namespace aads {

std::size_t count_valid(const DepthMap& depth)
{
    return static_cast<std::size_t>(
        std::count_if(depth.values().begin(), depth.values().end(), [](double d) { return is_valid_depth(d); }));
}

bool identical(const DepthMap& a, const DepthMap& b)
{
    if (!a.same_shape(b))
        return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool va = is_valid_depth(a[i]);
        if (va != is_valid_depth(b[i]) || (va && a[i] != b[i]))
            return false;
    }
    return true;
}

bool is_normalized(const ImageRaster& image)
{
    return std::all_of(image.values().begin(), image.values().end(),
                       [](const Rgb& c) { return c.minCoeff() >= 0.0 && c.maxCoeff() <= 1.0; });
}

double luminance(const Rgb& c)
{
    return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
}

CameraIntrinsics::CameraIntrinsics(double fx, double fy, double cx, double cy, int width, int height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height)
{
    if (!(fx > 0.0) || !(fy > 0.0))
        throw std::invalid_argument("focal lengths must be positive");
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("raster size must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
        throw std::invalid_argument("principal point outside the raster");
}

bool CameraIntrinsics::in_raster(const Vec2& pixel) const
{
    return pixel.x() >= -0.5 && pixel.x() < width_ - 0.5 && pixel.y() >= -0.5 && pixel.y() < height_ - 0.5;
}

Pose::Pose(const Mat3& rotation, const Vec3& translation) : rotation_(rotation), translation_(translation)
{
    if (!rotation.allFinite() || !translation.allFinite())
        throw std::invalid_argument("pose contains non-finite values");
    const double ortho_err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho_err > 1e-9)
        throw std::invalid_argument("pose rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9)
        throw std::invalid_argument("pose rotation is not a proper rotation");
}

Pose Pose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up)
{
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-12)
        throw std::invalid_argument("look_at: up is parallel to the viewing direction");
    right.normalize();
    const Vec3 down = forward.cross(right);
    Mat3 r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = forward;
    return Pose(r, eye);
}

Pose Pose::inverse() const
{
    const Mat3 rt = rotation_.transpose();
    return Pose(rt, -(rt * translation_));
}

Pose Pose::operator*(const Pose& other) const
{
    return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

double angle_between(const Vec3& a, const Vec3& b)
{
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

std::optional<Projection> project_unclipped(const Vec3& point_world, const CameraIntrinsics& intrinsics,
                                            const Pose& pose)
{
    const Vec3 p = pose.to_camera(point_world);
    if (!(p.z() > 0.0))
        return std::nullopt;
    const Vec2 pixel(intrinsics.fx() * p.x() / p.z() + intrinsics.cx(),
                     intrinsics.fy() * p.y() / p.z() + intrinsics.cy());
    return Projection{pixel, p.z()};
}

std::optional<Projection> project(const Vec3& point_world, const CameraIntrinsics& intrinsics, const Pose& pose)
{
    auto proj = project_unclipped(point_world, intrinsics, pose);
    if (!proj || !intrinsics.in_raster(proj->pixel))
        return std::nullopt;
    return proj;
}

Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& intrinsics, const Pose& pose)
{
    if (!is_valid_depth(depth))
        throw std::invalid_argument("unproject requires a positive finite depth");
    const Vec3 p((pixel.x() - intrinsics.cx()) / intrinsics.fx() * depth,
                 (pixel.y() - intrinsics.cy()) / intrinsics.fy() * depth, depth);
    return pose.to_world(p);
}

Vec3 pixel_ray(const Vec2& pixel, const CameraIntrinsics& intrinsics, const Pose& pose)
{
    const Vec3 d((pixel.x() - intrinsics.cx()) / intrinsics.fx(), (pixel.y() - intrinsics.cy()) / intrinsics.fy(),
                 1.0);
    return (pose.rotation() * d).normalized();
}

void ViewSample::validate() const
{
    const int w = camera.intrinsics.width();
    const int h = camera.intrinsics.height();
    if (image.width() != w || image.height() != h)
        throw std::invalid_argument("view image size does not match intrinsics");
    if (!image.same_shape(depth) || !image.same_shape(labels))
        throw std::invalid_argument("view rasters differ in size");
}

} // namespace aads
