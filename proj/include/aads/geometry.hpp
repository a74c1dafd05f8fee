#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace aads {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rgb = Eigen::Vector3d;

/// Invalid-depth sentinel. Any NaN counts as invalid.
inline constexpr double kInvalidDepth = std::numeric_limits<double>::quiet_NaN();

inline bool is_valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

/// Row-major 2D container; pixel (0,0) is the top-left corner.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width < 0 || height < 0)
            throw std::invalid_argument("raster dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    template <typename U>
    bool same_shape(const Raster<U>& other) const
    {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Raster& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using DepthMap = Raster<double>;
using ImageRaster = Raster<Rgb>;
using LabelRaster = Raster<std::uint16_t>;
using Mask = Raster<std::uint8_t>;

std::size_t count_valid(const DepthMap& depth);
/// Equality that treats every invalid pixel as equal to every other invalid pixel.
bool identical(const DepthMap& a, const DepthMap& b);
/// True when every channel of every pixel lies in [0,1].
bool is_normalized(const ImageRaster& image);
double luminance(const Rgb& c);

class CameraIntrinsics {
public:
    CameraIntrinsics(double fx, double fy, double cx, double cy, int width, int height);

    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    int width() const { return width_; }
    int height() const { return height_; }

    /// Pixel centers sit at integer coordinates, so the raster covers [-0.5, width-0.5).
    bool in_raster(const Vec2& pixel) const;

    bool operator==(const CameraIntrinsics&) const = default;

private:
    double fx_, fy_, cx_, cy_;
    int width_, height_;
};

/// Rigid camera-to-world transform. `translation` is the camera center in world coordinates.
class Pose {
public:
    Pose() = default;
    Pose(const Mat3& rotation, const Vec3& translation);

    static Pose identity() { return Pose{}; }
    /// Camera looking from `eye` towards `target`; `up` fixes the roll (image +y points away from it).
    static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }
    const Vec3& center() const { return translation_; }
    Vec3 optical_axis() const { return rotation_.col(2); }

    Vec3 to_world(const Vec3& p_camera) const { return rotation_ * p_camera + translation_; }
    Vec3 to_camera(const Vec3& p_world) const { return rotation_.transpose() * (p_world - translation_); }

    Pose inverse() const;
    /// (a * b) maps b's frame into a's parent frame.
    Pose operator*(const Pose& other) const;

private:
    Mat3 rotation_ = Mat3::Identity();
    Vec3 translation_ = Vec3::Zero();
};

/// Angle between two directions in radians, robust near 0 and pi.
double angle_between(const Vec3& a, const Vec3& b);

struct Camera {
    CameraIntrinsics intrinsics;
    Pose pose;
};

struct Projection {
    Vec2 pixel;
    double depth;
};

/// Pinhole projection of a world point. Returns nullopt when the point is behind
/// the camera or lands outside the raster.
std::optional<Projection> project(const Vec3& point_world, const CameraIntrinsics& intrinsics, const Pose& pose);

/// Pinhole projection without the raster test; nullopt only when depth <= 0.
std::optional<Projection> project_unclipped(const Vec3& point_world, const CameraIntrinsics& intrinsics,
                                            const Pose& pose);

/// Throws std::invalid_argument for non-positive or non-finite depth.
Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& intrinsics, const Pose& pose);

/// World-space unit ray direction through a pixel.
Vec3 pixel_ray(const Vec2& pixel, const CameraIntrinsics& intrinsics, const Pose& pose);

/// One captured reference: image, depth, labels, and the camera that took them.
struct ViewSample {
    ImageRaster image;
    DepthMap depth;
    LabelRaster labels;
    Camera camera;

    /// Throws std::invalid_argument when raster sizes disagree with each other or the intrinsics.
    void validate() const;
};

} // namespace aads
