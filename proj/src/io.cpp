#include "aads/io.hpp"

#include "aads/errors.hpp"

#include <Eigen/SVD>
#include <openssl/evp.h>
#include <png.h>

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace aads::io {

std::vector<std::uint8_t> read_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Json read_json(const fs::path& path)
{
    const auto bytes = read_bytes(path);
    try {
        return Json::parse(bytes.begin(), bytes.end());
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const Json& value)
{
    const std::string text = value.dump(2) + "\n";
    write_bytes(path, {text.begin(), text.end()});
}

// Camera ----------------------------------------------------------------------

namespace {

template <typename T>
T required(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw ParseError(std::string("missing field \"") + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad field \"") + key + "\": " + e.what());
    }
}

} // namespace

Pose pose_from_json(const Json& j)
{
    const auto r = required<std::vector<double>>(j, "rotation");
    const auto t = required<std::vector<double>>(j, "translation");
    if (r.size() != 9 || t.size() != 3)
        throw ParseError("rotation needs 9 values and translation 3");
    Mat3 rot;
    for (int i = 0; i < 9; ++i)
        rot(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
    // Files written with limited precision are snapped to the nearest rotation.
    const double err = (rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-9 && err < 1e-4) {
        Eigen::JacobiSVD<Mat3> svd(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
        rot = svd.matrixU() * svd.matrixV().transpose();
    }
    try {
        return Pose(rot, Vec3(t[0], t[1], t[2]));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
}

Json pose_to_json(const Pose& pose)
{
    std::vector<double> r(9);
    for (int i = 0; i < 9; ++i)
        r[static_cast<std::size_t>(i)] = pose.rotation()(i / 3, i % 3);
    const Vec3& t = pose.translation();
    return Json{{"rotation", r}, {"translation", {t.x(), t.y(), t.z()}}};
}

Camera camera_from_json(const Json& j)
{
    try {
        CameraIntrinsics k(required<double>(j, "fx"), required<double>(j, "fy"), required<double>(j, "cx"),
                           required<double>(j, "cy"), required<int>(j, "width"), required<int>(j, "height"));
        return Camera{k, pose_from_json(j)};
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
}

Json camera_to_json(const Camera& camera)
{
    const auto& k = camera.intrinsics;
    Json j = pose_to_json(camera.pose);
    j["fx"] = k.fx();
    j["fy"] = k.fy();
    j["cx"] = k.cx();
    j["cy"] = k.cy();
    j["width"] = k.width();
    j["height"] = k.height();
    return j;
}

Camera read_camera(const fs::path& path)
{
    try {
        return camera_from_json(read_json(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// DRF1 ------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

struct HeaderReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    std::string line()
    {
        std::string out;
        while (pos < bytes.size() && bytes[pos] != '\n')
            out.push_back(static_cast<char>(bytes[pos++]));
        if (pos >= bytes.size())
            throw ParseError("unterminated header line");
        ++pos;
        return out;
    }
};

} // namespace

std::vector<std::uint8_t> encode_drf(const DepthMap& depth)
{
    const std::string header = "DRF1 " + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + depth.size() * 4);
    for (double d : depth.values()) {
        const float f = is_valid_depth(d) ? static_cast<float>(d) : std::numeric_limits<float>::quiet_NaN();
        std::array<std::uint8_t, 4> b;
        std::memcpy(b.data(), &f, 4);
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

DepthMap decode_drf(const std::vector<std::uint8_t>& bytes)
{
    HeaderReader reader{bytes};
    std::istringstream header(reader.line());
    std::string magic;
    int w = -1;
    int h = -1;
    header >> magic >> w >> h;
    if (magic != "DRF1" || w < 0 || h < 0)
        throw ParseError("not a DRF1 depth file");
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - reader.pos != n * 4)
        throw ParseError("DRF1 payload size mismatch");
    DepthMap depth(w, h);
    for (std::size_t i = 0; i < n; ++i) {
        float f;
        std::memcpy(&f, bytes.data() + reader.pos + 4 * i, 4);
        depth[i] = std::isfinite(f) && f > 0.0f ? static_cast<double>(f) : kInvalidDepth;
    }
    return depth;
}

DepthMap read_drf(const fs::path& path)
{
    try {
        return decode_drf(read_bytes(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_drf(const fs::path& path, const DepthMap& depth)
{
    write_bytes(path, encode_drf(depth));
}

// Images ----------------------------------------------------------------------

std::uint8_t to_byte(double v)
{
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

std::vector<std::uint8_t> encode_ppm(const ImageRaster& image)
{
    const std::string header =
        "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.size() * 3);
    for (const Rgb& c : image.values())
        for (int k = 0; k < 3; ++k)
            out.push_back(to_byte(c[k]));
    return out;
}

ImageRaster decode_ppm(const std::vector<std::uint8_t>& bytes)
{
    // Tokens separated by whitespace, '#' comments allowed, one whitespace byte before the raster.
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos]))
            t.push_back(static_cast<char>(bytes[pos++]));
        return t;
    };
    if (token() != "P6")
        throw ParseError("only binary PPM (P6) is supported");
    int w = 0;
    int h = 0;
    int maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw ParseError("malformed PPM header");
    }
    if (maxval != 255 || w <= 0 || h <= 0)
        throw ParseError("PPM must be 8-bit with positive size");
    ++pos;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() < pos + n * 3)
        throw ParseError("truncated PPM raster");
    ImageRaster image(w, h);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k)
            image[i][k] = bytes[pos + 3 * i + static_cast<std::size_t>(k)] / 255.0;
    return image;
}

namespace {

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* file = nullptr;
    ~PngWriter()
    {
        if (png)
            png_destroy_write_struct(&png, info ? &info : nullptr);
        if (file)
            std::fclose(file);
    }
};

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* file = nullptr;
    ~PngReader()
    {
        if (png)
            png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (file)
            std::fclose(file);
    }
};

// rows: one byte vector per row, already in PNG byte order.
void write_png_rows(const fs::path& path, int width, int height, int bit_depth, int color_type,
                    std::vector<std::vector<std::uint8_t>>& rows)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    PngWriter w;
    w.file = std::fopen(path.c_str(), "wb");
    if (!w.file)
        throw std::runtime_error("cannot write " + path.string());
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    w.info = png_create_info_struct(w.png);
    if (!w.png || !w.info)
        throw std::runtime_error("libpng initialisation failed");
    if (setjmp(png_jmpbuf(w.png)))
        throw std::runtime_error("libpng failed writing " + path.string());
    png_init_io(w.png, w.file);
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    for (auto& row : rows)
        png_write_row(w.png, row.data());
    png_write_end(w.png, nullptr);
}

struct DecodedPng {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::vector<std::uint8_t>> rows;
};

DecodedPng read_png_rows(const fs::path& path, bool keep16)
{
    PngReader r;
    r.file = std::fopen(path.c_str(), "rb");
    if (!r.file)
        throw ParseError("cannot open " + path.string());
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    r.info = png_create_info_struct(r.png);
    if (!r.png || !r.info)
        throw std::runtime_error("libpng initialisation failed");
    if (setjmp(png_jmpbuf(r.png)))
        throw ParseError("malformed PNG " + path.string());
    png_init_io(r.png, r.file);
    png_read_info(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(r.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(r.png);
    if (color & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(r.png);
    if (depth == 16 && !keep16)
        png_set_strip_16(r.png);
    if (depth == 16 && keep16)
        png_set_swap(r.png);
    png_read_update_info(r.png, r.info);

    DecodedPng out;
    out.width = static_cast<int>(png_get_image_width(r.png, r.info));
    out.height = static_cast<int>(png_get_image_height(r.png, r.info));
    out.channels = png_get_channels(r.png, r.info);
    out.bit_depth = png_get_bit_depth(r.png, r.info);
    const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
    out.rows.assign(static_cast<std::size_t>(out.height), std::vector<std::uint8_t>(rowbytes));
    std::vector<png_bytep> ptrs;
    for (auto& row : out.rows)
        ptrs.push_back(row.data());
    png_read_image(r.png, ptrs.data());
    png_read_end(r.png, nullptr);
    return out;
}

bool has_png_magic(const std::vector<std::uint8_t>& head)
{
    static constexpr std::array<std::uint8_t, 8> kMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return head.size() >= 8 && std::equal(kMagic.begin(), kMagic.end(), head.begin());
}

} // namespace

ImageRaster read_image(const fs::path& path)
{
    const auto bytes = read_bytes(path);
    if (!has_png_magic(bytes)) {
        try {
            return decode_ppm(bytes);
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    }
    const DecodedPng png = read_png_rows(path, false);
    ImageRaster image(png.width, png.height);
    for (int y = 0; y < png.height; ++y) {
        const auto& row = png.rows[static_cast<std::size_t>(y)];
        for (int x = 0; x < png.width; ++x) {
            for (int k = 0; k < 3; ++k) {
                const int c = png.channels >= 3 ? k : 0;
                image(x, y)[k] = row[static_cast<std::size_t>(x * png.channels + c)] / 255.0;
            }
        }
    }
    return image;
}

void write_png(const fs::path& path, const ImageRaster& image)
{
    std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(image.height()));
    for (int y = 0; y < image.height(); ++y) {
        auto& row = rows[static_cast<std::size_t>(y)];
        row.reserve(static_cast<std::size_t>(image.width()) * 3);
        for (int x = 0; x < image.width(); ++x)
            for (int k = 0; k < 3; ++k)
                row.push_back(to_byte(image(x, y)[k]));
    }
    write_png_rows(path, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_ppm(const fs::path& path, const ImageRaster& image)
{
    write_bytes(path, encode_ppm(image));
}

void write_png16(const fs::path& path, const LabelRaster& raster)
{
    std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(raster.height()));
    for (int y = 0; y < raster.height(); ++y) {
        auto& row = rows[static_cast<std::size_t>(y)];
        for (int x = 0; x < raster.width(); ++x) {
            const std::uint16_t v = raster(x, y);
            row.push_back(static_cast<std::uint8_t>(v >> 8));
            row.push_back(static_cast<std::uint8_t>(v & 0xff));
        }
    }
    write_png_rows(path, raster.width(), raster.height(), 16, PNG_COLOR_TYPE_GRAY, rows);
}

LabelRaster read_png16(const fs::path& path)
{
    const DecodedPng png = read_png_rows(path, true);
    LabelRaster out(png.width, png.height);
    const int bytes_per_sample = png.bit_depth == 16 ? 2 : 1;
    const int stride = png.channels * bytes_per_sample;
    for (int y = 0; y < png.height; ++y) {
        const auto& row = png.rows[static_cast<std::size_t>(y)];
        for (int x = 0; x < png.width; ++x) {
            const std::size_t o = static_cast<std::size_t>(x * stride);
            out(x, y) = bytes_per_sample == 2 ? static_cast<std::uint16_t>(row[o] | (row[o + 1] << 8)) : row[o];
        }
    }
    return out;
}

void write_mask_png(const fs::path& path, const Mask& mask)
{
    std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(mask.height()));
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            rows[static_cast<std::size_t>(y)].push_back(mask(x, y) ? 255 : 0);
    write_png_rows(path, mask.width(), mask.height(), 8, PNG_COLOR_TYPE_GRAY, rows);
}

Mask read_mask_png(const fs::path& path)
{
    const DecodedPng png = read_png_rows(path, false);
    Mask out(png.width, png.height);
    for (int y = 0; y < png.height; ++y)
        for (int x = 0; x < png.width; ++x)
            out(x, y) = png.rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x * png.channels)] ? 1 : 0;
    return out;
}

// PLY -------------------------------------------------------------------------

namespace {

struct PlyTypeInfo {
    PlyType type;
    const char* name;
    const char* alias;
    int size;
};

constexpr std::array<PlyTypeInfo, 8> kPlyTypes{{
    {PlyType::Int8, "char", "int8", 1},
    {PlyType::UInt8, "uchar", "uint8", 1},
    {PlyType::Int16, "short", "int16", 2},
    {PlyType::UInt16, "ushort", "uint16", 2},
    {PlyType::Int32, "int", "int32", 4},
    {PlyType::UInt32, "uint", "uint32", 4},
    {PlyType::Float32, "float", "float32", 4},
    {PlyType::Float64, "double", "float64", 8},
}};

const PlyTypeInfo& type_info(PlyType t)
{
    for (const auto& info : kPlyTypes)
        if (info.type == t)
            return info;
    throw std::logic_error("unknown PLY type");
}

PlyType parse_type(const std::string& s)
{
    for (const auto& info : kPlyTypes)
        if (s == info.name || s == info.alias)
            return info.type;
    throw ParseError("unknown PLY property type " + s);
}

template <typename T>
void append_raw(std::vector<std::uint8_t>& out, T v)
{
    std::array<std::uint8_t, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    out.insert(out.end(), b.begin(), b.end());
}

void append_binary(std::vector<std::uint8_t>& out, PlyType t, double v)
{
    switch (t) {
    case PlyType::Int8: append_raw(out, static_cast<std::int8_t>(v)); break;
    case PlyType::UInt8: append_raw(out, static_cast<std::uint8_t>(v)); break;
    case PlyType::Int16: append_raw(out, static_cast<std::int16_t>(v)); break;
    case PlyType::UInt16: append_raw(out, static_cast<std::uint16_t>(v)); break;
    case PlyType::Int32: append_raw(out, static_cast<std::int32_t>(v)); break;
    case PlyType::UInt32: append_raw(out, static_cast<std::uint32_t>(v)); break;
    case PlyType::Float32: append_raw(out, static_cast<float>(v)); break;
    case PlyType::Float64: append_raw(out, v); break;
    }
}

template <typename T>
double read_raw(const std::uint8_t* p)
{
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
}

double read_binary(PlyType t, const std::uint8_t* p)
{
    switch (t) {
    case PlyType::Int8: return read_raw<std::int8_t>(p);
    case PlyType::UInt8: return read_raw<std::uint8_t>(p);
    case PlyType::Int16: return read_raw<std::int16_t>(p);
    case PlyType::UInt16: return read_raw<std::uint16_t>(p);
    case PlyType::Int32: return read_raw<std::int32_t>(p);
    case PlyType::UInt32: return read_raw<std::uint32_t>(p);
    case PlyType::Float32: return read_raw<float>(p);
    case PlyType::Float64: return read_raw<double>(p);
    }
    return 0.0;
}

std::string format_ascii(PlyType t, double v)
{
    std::ostringstream os;
    if (t == PlyType::Float32)
        os << std::setprecision(9) << static_cast<float>(v);
    else if (t == PlyType::Float64)
        os << std::setprecision(17) << v;
    else
        os << static_cast<long long>(v);
    return os.str();
}

} // namespace

int PlyTable::find(const std::string& name) const
{
    for (std::size_t i = 0; i < properties.size(); ++i)
        if (properties[i].name == name)
            return static_cast<int>(i);
    return -1;
}

std::vector<std::uint8_t> encode_ply(const PlyTable& table, PlyFormat format)
{
    std::ostringstream header;
    header << "ply\nformat " << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
    header << "element vertex " << table.rows.size() << "\n";
    for (const auto& p : table.properties)
        header << "property " << type_info(p.type).name << " " << p.name << "\n";
    header << "end_header\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    for (const auto& row : table.rows) {
        if (row.size() != table.properties.size())
            throw std::invalid_argument("PLY row width does not match property count");
        if (format == PlyFormat::Ascii) {
            std::string line;
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i)
                    line += ' ';
                line += format_ascii(table.properties[i].type, row[i]);
            }
            line += '\n';
            out.insert(out.end(), line.begin(), line.end());
        } else {
            for (std::size_t i = 0; i < row.size(); ++i)
                append_binary(out, table.properties[i].type, row[i]);
        }
    }
    return out;
}

PlyTable decode_ply(const std::vector<std::uint8_t>& bytes)
{
    HeaderReader reader{bytes};
    if (reader.line() != "ply")
        throw ParseError("missing PLY magic");
    PlyTable table;
    PlyFormat format = PlyFormat::Ascii;
    std::size_t vertex_count = 0;
    bool in_vertex = false;
    bool seen_vertex = false;
    for (;;) {
        const std::string line = reader.line();
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "end_header")
            break;
        if (kw == "format") {
            std::string f;
            ls >> f;
            if (f == "ascii")
                format = PlyFormat::Ascii;
            else if (f == "binary_little_endian")
                format = PlyFormat::BinaryLittleEndian;
            else
                throw ParseError("unsupported PLY format " + f);
        } else if (kw == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (seen_vertex && count > 0)
                throw ParseError("PLY elements after 'vertex' are not supported");
            in_vertex = name == "vertex";
            if (in_vertex) {
                vertex_count = count;
                seen_vertex = true;
            } else if (count > 0) {
                throw ParseError("PLY element '" + name + "' before vertex is not supported");
            }
        } else if (kw == "property") {
            std::string type;
            std::string name;
            ls >> type >> name;
            if (type == "list")
                throw ParseError("PLY list properties are not supported");
            if (in_vertex)
                table.properties.push_back({name, parse_type(type)});
        } else if (kw != "comment" && kw != "obj_info" && !kw.empty()) {
            throw ParseError("unexpected PLY header line: " + line);
        }
    }
    if (!seen_vertex)
        throw ParseError("PLY has no vertex element");

    const std::size_t np = table.properties.size();
    table.rows.reserve(vertex_count);
    if (format == PlyFormat::Ascii) {
        std::string body(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos), bytes.end());
        std::istringstream in(body);
        for (std::size_t r = 0; r < vertex_count; ++r) {
            std::vector<double> row(np);
            for (std::size_t i = 0; i < np; ++i)
                if (!(in >> row[i]))
                    throw ParseError("truncated PLY body at vertex " + std::to_string(r));
            table.rows.push_back(std::move(row));
        }
    } else {
        std::size_t stride = 0;
        for (const auto& p : table.properties)
            stride += static_cast<std::size_t>(type_info(p.type).size);
        if (bytes.size() - reader.pos < stride * vertex_count)
            throw ParseError("truncated binary PLY body");
        const std::uint8_t* p = bytes.data() + reader.pos;
        for (std::size_t r = 0; r < vertex_count; ++r) {
            std::vector<double> row(np);
            for (std::size_t i = 0; i < np; ++i) {
                row[i] = read_binary(table.properties[i].type, p);
                p += type_info(table.properties[i].type).size;
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

PlyTable read_ply(const fs::path& path)
{
    try {
        return decode_ply(read_bytes(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_ply(const fs::path& path, const PlyTable& table, PlyFormat format)
{
    write_bytes(path, encode_ply(table, format));
}

// Hashing ---------------------------------------------------------------------

std::string sha256_hex(const std::vector<std::uint8_t>& bytes)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

std::string sha256_file(const fs::path& path)
{
    return sha256_hex(read_bytes(path));
}

} // namespace aads::io
