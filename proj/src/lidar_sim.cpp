#include "aads/lidar_sim.hpp"

#include "aads/config_util.hpp"
#include "aads/rasterizer.hpp"
#include "aads/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace aads {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Columns are the face camera's right, down and forward axes in the sensor frame.
Mat3 face_basis(CubeFace face)
{
    Vec3 fwd, down;
    switch (face) {
    case CubeFace::PosX: fwd = Vec3::UnitX(); down = -Vec3::UnitZ(); break;
    case CubeFace::NegX: fwd = -Vec3::UnitX(); down = -Vec3::UnitZ(); break;
    case CubeFace::PosY: fwd = Vec3::UnitY(); down = -Vec3::UnitZ(); break;
    case CubeFace::NegY: fwd = -Vec3::UnitY(); down = -Vec3::UnitZ(); break;
    case CubeFace::PosZ: fwd = Vec3::UnitZ(); down = Vec3::UnitX(); break;
    case CubeFace::NegZ: fwd = -Vec3::UnitZ(); down = Vec3::UnitX(); break;
    }
    Mat3 r;
    r.col(0) = down.cross(fwd);
    r.col(1) = down;
    r.col(2) = fwd;
    return r;
}

CubeFace major_face(const Vec3& d)
{
    const Vec3 a = d.cwiseAbs();
    if (a.x() >= a.y() && a.x() >= a.z())
        return d.x() >= 0.0 ? CubeFace::PosX : CubeFace::NegX;
    if (a.y() >= a.z())
        return d.y() >= 0.0 ? CubeFace::PosY : CubeFace::NegY;
    return d.z() >= 0.0 ? CubeFace::PosZ : CubeFace::NegZ;
}

CameraIntrinsics face_intrinsics(int res)
{
    const double f = res / 2.0;
    const double c = (res - 1) / 2.0;
    return CameraIntrinsics(f, f, c, c, res, res);
}

double sample_std(const std::vector<double>& v, double mean)
{
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace

BeamModel BeamModel::hdl64()
{
    BeamModel m;
    m.beams.resize(64);
    for (int i = 0; i < 64; ++i)
        m.beams[static_cast<std::size_t>(i)] = -24.33 + (2.0 + 24.33) * i / 63.0;
    m.beams.back() = 2.0;
    return m;
}

std::size_t BeamModel::azimuth_count() const
{
    return static_cast<std::size_t>(std::ceil(360.0 / azimuth_step - 1e-9));
}

void BeamModel::validate() const
{
    if (beams.empty())
        throw std::invalid_argument("BeamModel: no beams");
    if (beams.size() > 256)
        throw std::invalid_argument("BeamModel: more than 256 beams");
    for (std::size_t i = 0; i < beams.size(); ++i) {
        if (!std::isfinite(beams[i]) || beams[i] <= -90.0 || beams[i] >= 90.0)
            throw std::invalid_argument("BeamModel: beam angle outside (-90, 90)");
        if (i > 0 && beams[i] < beams[i - 1])
            throw std::invalid_argument("BeamModel: beams must be sorted ascending");
    }
    if (!(azimuth_step > 0.0 && azimuth_step <= 360.0))
        throw std::invalid_argument("BeamModel: azimuth_step must be in (0, 360]");
    if (!(sigma_range >= 0.0) || !(sigma_azimuth >= 0.0))
        throw std::invalid_argument("BeamModel: noise sigmas must be >= 0");
    if (!(max_range > 0.0))
        throw std::invalid_argument("BeamModel: max_range must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw std::invalid_argument("BeamModel: dropout must be in [0, 1)");
}

BeamModel BeamModel::from_json(const nlohmann::json& j)
{
    const std::string where = "beam model";
    config::check_keys(j, {"beams", "azimuth_step", "sigma_range", "sigma_azimuth", "max_range", "dropout", "rng_seed"},
                       where);
    BeamModel m = hdl64();
    config::read_opt(j, "beams", m.beams, where);
    config::read_opt(j, "azimuth_step", m.azimuth_step, where);
    config::read_opt(j, "sigma_range", m.sigma_range, where);
    config::read_opt(j, "sigma_azimuth", m.sigma_azimuth, where);
    config::read_opt(j, "max_range", m.max_range, where);
    config::read_opt(j, "dropout", m.dropout, where);
    config::read_opt(j, "rng_seed", m.rng_seed, where);
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    return m;
}

nlohmann::json BeamModel::to_json() const
{
    return {{"beams", beams},
            {"azimuth_step", azimuth_step},
            {"sigma_range", sigma_range},
            {"sigma_azimuth", sigma_azimuth},
            {"max_range", max_range},
            {"dropout", dropout},
            {"rng_seed", rng_seed}};
}

Vec3 beam_direction(double elevation_deg, double azimuth_deg)
{
    const double e = elevation_deg * kDeg;
    const double a = azimuth_deg * kDeg;
    return {std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e)};
}

BeamFit fit_beam_model(std::span<const std::vector<Vec3>> beams)
{
    if (beams.empty())
        throw std::invalid_argument("fit_beam_model: no beams");
    if (beams.size() > 256)
        throw std::invalid_argument("fit_beam_model: more than 256 beams");
    const std::size_t n = beams.size();
    std::vector<double> angle(n), elev_sigma(n), radial_sigma(n);
    for (std::size_t b = 0; b < n; ++b) {
        const auto& pts = beams[b];
        if (pts.size() < 10)
            throw std::invalid_argument("fit_beam_model: beam " + std::to_string(b) + " has " +
                                        std::to_string(pts.size()) + " points, need at least 10");
        std::vector<double> elev;
        elev.reserve(pts.size());
        for (const Vec3& p : pts) {
            if (!p.allFinite() || p.norm() == 0.0)
                throw std::invalid_argument("fit_beam_model: beam " + std::to_string(b) + " has a degenerate point");
            elev.push_back(std::atan2(p.z(), std::hypot(p.x(), p.y())) / kDeg);
        }
        const double mean = std::accumulate(elev.begin(), elev.end(), 0.0) / static_cast<double>(elev.size());
        std::vector<double> resid;
        resid.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            resid.push_back(pts[i].norm() * std::sin((elev[i] - mean) * kDeg));
        const double rmean = std::accumulate(resid.begin(), resid.end(), 0.0) / static_cast<double>(resid.size());
        angle[b] = mean;
        elev_sigma[b] = sample_std(elev, mean);
        radial_sigma[b] = sample_std(resid, rmean);
    }

    BeamFit fit;
    fit.source.resize(n);
    std::iota(fit.source.begin(), fit.source.end(), std::size_t{0});
    std::stable_sort(fit.source.begin(), fit.source.end(), [&](std::size_t a, std::size_t b) { return angle[a] < angle[b]; });
    double var_e = 0.0, var_r = 0.0;
    for (std::size_t s : fit.source) {
        fit.model.beams.push_back(angle[s]);
        fit.elevation_sigma.push_back(elev_sigma[s]);
        fit.radial_sigma.push_back(radial_sigma[s]);
        var_e += elev_sigma[s] * elev_sigma[s];
        var_r += radial_sigma[s] * radial_sigma[s];
    }
    fit.model.sigma_azimuth = std::sqrt(var_e / static_cast<double>(n));
    fit.model.sigma_range = std::sqrt(var_r / static_cast<double>(n));
    return fit;
}

Camera CubeMapDepth::face_camera(CubeFace face) const
{
    const Pose local(face_basis(face), Vec3::Zero());
    return {face_intrinsics(resolution), origin * local};
}

std::optional<CubeMapDepth::Hit> CubeMapDepth::lookup(const Vec3& direction) const
{
    const CubeFace face = major_face(direction);
    const Mat3 basis = face_basis(face);
    const Vec3 local = basis.transpose() * direction;
    if (!(local.z() > 0.0))
        return std::nullopt;
    const double f = resolution / 2.0;
    const double c = (resolution - 1) / 2.0;
    const int x = std::clamp(static_cast<int>(std::lround(f * local.x() / local.z() + c)), 0, resolution - 1);
    const int y = std::clamp(static_cast<int>(std::lround(f * local.y() / local.z() + c)), 0, resolution - 1);
    const auto fi = static_cast<std::size_t>(face);
    const double z = depth[fi](x, y);
    if (!is_valid_depth(z))
        return std::nullopt;
    return Hit{z * direction.norm() / local.z(), labels[fi](x, y)};
}

CubeMapDepth render_cube_map(const SceneGeometry& scene, const Pose& origin, int resolution)
{
    if (scene.empty())
        throw std::invalid_argument("render_cube_map: empty scene");
    if (resolution < 1)
        throw std::invalid_argument("render_cube_map: resolution must be positive");
    CubeMapDepth cube;
    cube.resolution = resolution;
    cube.origin = origin;
    for (int fi = 0; fi < 6; ++fi) {
        const Camera cam = cube.face_camera(static_cast<CubeFace>(fi));
        DepthMap& depth = cube.depth[static_cast<std::size_t>(fi)];
        LabelRaster& labels = cube.labels[static_cast<std::size_t>(fi)];
        depth = DepthMap(resolution, resolution, kInvalidDepth);
        labels = LabelRaster(resolution, resolution, label::kUnknown);
        auto write = [&](int x, int y, double z, std::uint16_t cls) {
            const double cur = depth(x, y);
            if (!is_valid_depth(cur) || z < cur) {
                depth(x, y) = z;
                labels(x, y) = cls;
            }
        };
        for (const Triangle& t : scene.triangles)
            rasterize_triangle(t.vertices, cam.intrinsics, cam.pose,
                               [&](int x, int y, double z) { write(x, y, z, t.class_id); });
        for (const ScenePoint& p : scene.points) {
            const auto proj = project_unclipped(p.position, cam.intrinsics, cam.pose);
            if (!proj || proj->depth < kNearPlane)
                continue;
            for_each_splat_pixel(proj->pixel, resolution, resolution,
                                 [&](int x, int y) { write(x, y, proj->depth, p.class_id); });
        }
    }
    return cube;
}

LidarScan cast_scan(const BeamModel& model, const CubeMapDepth& cube, std::uint64_t frame)
{
    model.validate();
    if (cube.resolution < 1)
        throw std::invalid_argument("cast_scan: empty cube map");
    LidarScan scan;
    scan.pose = cube.origin;
    scan.frame = frame;
    const std::size_t steps = model.azimuth_count();
    scan.points.reserve(steps * model.beams.size());
    for (std::size_t k = 0; k < steps; ++k) {
        const double azimuth = static_cast<double>(k) * model.azimuth_step;
        for (std::size_t b = 0; b < model.beams.size(); ++b) {
            const std::uint64_t key = rng::hash({model.rng_seed, frame, b, k});
            if (model.dropout > 0.0 && rng::to_unit(rng::mix(key ^ 0x3ull)) < model.dropout)
                continue;
            const double az = azimuth + model.sigma_azimuth * rng::normal_from(rng::mix(key ^ 0x10ull));
            const Vec3 dir = beam_direction(model.beams[b], az);
            const auto hit = cube.lookup(dir);
            if (!hit)
                continue;
            const double range = hit->range + model.sigma_range * rng::normal_from(rng::mix(key ^ 0x20ull));
            if (!(range > 0.0) || range > model.max_range)
                continue;
            LidarPoint pt;
            pt.position = range * dir;
            pt.range = range;
            pt.beam_id = static_cast<std::uint8_t>(b);
            pt.azimuth = azimuth;
            pt.class_id = hit->class_id;
            scan.points.push_back(pt);
        }
    }
    return scan;
}

std::vector<LidarScan> simulate_sequence(const SceneGeometry& scene, std::span<const Pose> trajectory,
                                         const BeamModel& model, int resolution)
{
    if (trajectory.empty())
        throw std::invalid_argument("simulate_sequence: empty trajectory");
    model.validate();
    std::vector<LidarScan> scans;
    scans.reserve(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i)
        scans.push_back(cast_scan(model, render_cube_map(scene, trajectory[i], resolution), i));
    return scans;
}

io::PlyTable scan_to_ply(const LidarScan& scan)
{
    io::PlyTable t;
    t.properties = {{"x", io::PlyType::Float32},     {"y", io::PlyType::Float32},     {"z", io::PlyType::Float32},
                    {"range", io::PlyType::Float32}, {"beam_id", io::PlyType::UInt8}, {"azimuth", io::PlyType::Float32},
                    {"class_id", io::PlyType::UInt16}};
    t.rows.reserve(scan.points.size());
    for (const LidarPoint& p : scan.points)
        t.rows.push_back({p.position.x(), p.position.y(), p.position.z(), p.range, static_cast<double>(p.beam_id),
                          p.azimuth, static_cast<double>(p.class_id)});
    return t;
}

LidarScan scan_from_ply(const io::PlyTable& table)
{
    const char* names[] = {"x", "y", "z", "range", "beam_id", "azimuth", "class_id"};
    int col[7];
    for (int i = 0; i < 7; ++i) {
        col[i] = table.find(names[i]);
        if (col[i] < 0)
            throw ParseError(std::string("scan PLY: missing property ") + names[i]);
    }
    LidarScan scan;
    scan.points.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        LidarPoint p;
        p.position = Vec3(row[static_cast<std::size_t>(col[0])], row[static_cast<std::size_t>(col[1])],
                          row[static_cast<std::size_t>(col[2])]);
        p.range = row[static_cast<std::size_t>(col[3])];
        p.beam_id = static_cast<std::uint8_t>(row[static_cast<std::size_t>(col[4])]);
        p.azimuth = row[static_cast<std::size_t>(col[5])];
        p.class_id = static_cast<std::uint16_t>(row[static_cast<std::size_t>(col[6])]);
        scan.points.push_back(p);
    }
    return scan;
}

} // namespace aads
