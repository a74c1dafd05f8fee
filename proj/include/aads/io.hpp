#pragma once

#include "aads/geometry.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aads::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes);

Json read_json(const fs::path& path);
/// Pretty-printed with a trailing newline so repeated writes are byte-identical.
void write_json(const fs::path& path, const Json& value);

// Camera file: {"fx","fy","cx","cy","width","height","rotation":[9 row-major],"translation":[3]}
Camera camera_from_json(const Json& j);
Json camera_to_json(const Camera& camera);
Pose pose_from_json(const Json& j);
Json pose_to_json(const Pose& pose);
Camera read_camera(const fs::path& path);

// Depth file: "DRF1 <w> <h>\n" then w*h little-endian float32, NaN = invalid.
std::vector<std::uint8_t> encode_drf(const DepthMap& depth);
DepthMap decode_drf(const std::vector<std::uint8_t>& bytes);
DepthMap read_drf(const fs::path& path);
void write_drf(const fs::path& path, const DepthMap& depth);

// 8-bit colour images. Reading accepts PPM (P6, maxval 255) and PNG.
ImageRaster read_image(const fs::path& path);
void write_png(const fs::path& path, const ImageRaster& image);
void write_ppm(const fs::path& path, const ImageRaster& image);
std::vector<std::uint8_t> encode_ppm(const ImageRaster& image);
ImageRaster decode_ppm(const std::vector<std::uint8_t>& bytes);

/// 16-bit single-channel PNG (labels, instance masks, provenance).
void write_png16(const fs::path& path, const LabelRaster& raster);
LabelRaster read_png16(const fs::path& path);
/// 8-bit single-channel PNG, nonzero stored as 255.
void write_mask_png(const fs::path& path, const Mask& mask);
Mask read_mask_png(const fs::path& path);

std::uint8_t to_byte(double v);

// PLY ------------------------------------------------------------------------

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

struct PlyProperty {
    std::string name;
    PlyType type;
};

/// A single "vertex" element with scalar properties; every value is carried as double.
struct PlyTable {
    std::vector<PlyProperty> properties;
    std::vector<std::vector<double>> rows;

    /// Index of a property, or -1.
    int find(const std::string& name) const;
};

enum class PlyFormat { Ascii, BinaryLittleEndian };

std::vector<std::uint8_t> encode_ply(const PlyTable& table, PlyFormat format);
PlyTable decode_ply(const std::vector<std::uint8_t>& bytes);
PlyTable read_ply(const fs::path& path);
void write_ply(const fs::path& path, const PlyTable& table, PlyFormat format);

// Hashing ---------------------------------------------------------------------

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const fs::path& path);

} // namespace aads::io
