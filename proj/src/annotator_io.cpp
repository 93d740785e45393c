#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "annofuse/annotators.hpp"

namespace annofuse {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& msg) {
    throw InputError(path.string() + ": " + msg);
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        fail(path, e.what());
    }
    return j;
}

PointLabel label_from_int(long v, const std::filesystem::path& path, std::size_t row) {
    switch (v) {
        case 0: return PointLabel::Other;
        case 1: return PointLabel::Ground;
        case 2: return PointLabel::Pole;
        default:
            fail(path, "row " + std::to_string(row) + ": label " + std::to_string(v) +
                           " not in {0 = other, 1 = ground, 2 = pole}");
    }
}

PointLabel label_from_string(std::string_view s, const std::filesystem::path& path,
                             std::size_t row) {
    if (s == "ground") return PointLabel::Ground;
    if (s == "pole") return PointLabel::Pole;
    if (s == "other") return PointLabel::Other;
    fail(path, "row " + std::to_string(row) + ": label \"" + std::string(s) +
                   "\" not in {ground, pole, other}");
}

LabeledCloud load_cloud_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    LabeledCloud cloud;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row == 1 && line.rfind("x,", 0) == 0) continue;  // optional header

        std::array<std::string, 4> fields;
        std::size_t field = 0, start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field >= 4) fail(path, "row " + std::to_string(row) + ": too many fields");
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field != 4) fail(path, "row " + std::to_string(row) + ": expected x,y,z,label");

        Eigen::Vector3d p;
        for (int k = 0; k < 3; ++k) {
            try {
                std::size_t used = 0;
                p[k] = std::stod(fields[k], &used);
                if (used != fields[k].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                fail(path, "row " + std::to_string(row) + ": bad number \"" + fields[k] + "\"");
            }
        }
        cloud.points.push_back(p);
        cloud.labels.push_back(label_from_string(fields[3], path, row));
    }
    return cloud;
}

// Minimal PLY reader: ascii or binary_little_endian, element "vertex" with
// float/double x, y, z and an integer "label" property; other vertex
// properties are skipped, other elements must come after vertex data and are
// ignored.
struct PlyProperty {
    std::string name;
    std::string type;
};

std::size_t ply_type_size(const std::string& t, const std::filesystem::path& path) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    fail(path, "unsupported PLY property type \"" + t + "\"");
}

double ply_read_number(const unsigned char* p, const std::string& t) {
    auto as = [&]<typename T>(T) {
        T v;
        std::memcpy(&v, p, sizeof(T));
        return static_cast<double>(v);
    };
    if (t == "char" || t == "int8") return as(std::int8_t{});
    if (t == "uchar" || t == "uint8") return as(std::uint8_t{});
    if (t == "short" || t == "int16") return as(std::int16_t{});
    if (t == "ushort" || t == "uint16") return as(std::uint16_t{});
    if (t == "int" || t == "int32") return as(std::int32_t{});
    if (t == "uint" || t == "uint32") return as(std::uint32_t{});
    if (t == "float" || t == "float32") return as(float{});
    return as(double{});
}

LabeledCloud load_cloud_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::string line;
    if (!std::getline(in, line) || (line != "ply" && line != "ply\r")) fail(path, "not a PLY file");

    bool binary = false, format_seen = false, in_vertex = false;
    std::size_t vertex_count = 0;
    std::vector<PlyProperty> props;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment" || word.empty()) continue;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian")
                binary = true;
            else if (fmt != "ascii")
                fail(path, "unsupported PLY format \"" + fmt + "\"");
            format_seen = true;
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (name == "vertex") {
                vertex_count = count;
                in_vertex = true;
            } else {
                // Data follows declaration order; only a leading vertex
                // element can be parsed.
                if (vertex_count == 0 && count > 0)
                    fail(path, "vertex must be the first element");
                in_vertex = false;
            }
        } else if (word == "property") {
            if (!in_vertex) continue;
            std::string type, name;
            ls >> type >> name;
            if (type == "list") fail(path, "list properties are not supported on vertices");
            props.push_back({name, type});
        } else if (word == "end_header") {
            break;
        }
    }
    if (!format_seen) fail(path, "missing PLY format line");

    int ix = -1, iy = -1, iz = -1, ilabel = -1;
    for (std::size_t i = 0; i < props.size(); ++i) {
        if (props[i].name == "x") ix = static_cast<int>(i);
        if (props[i].name == "y") iy = static_cast<int>(i);
        if (props[i].name == "z") iz = static_cast<int>(i);
        if (props[i].name == "label") ilabel = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0 || ilabel < 0)
        fail(path, "vertex element must declare x, y, z and label properties");
    const std::string& label_type = props[ilabel].type;
    if (label_type == "float" || label_type == "float32" || label_type == "double" ||
        label_type == "float64")
        fail(path, "label property must be an integer type");

    LabeledCloud cloud;
    cloud.points.reserve(vertex_count);
    cloud.labels.reserve(vertex_count);

    if (binary) {
        std::size_t stride = 0;
        std::vector<std::size_t> offsets(props.size());
        for (std::size_t i = 0; i < props.size(); ++i) {
            offsets[i] = stride;
            stride += ply_type_size(props[i].type, path);
        }
        std::vector<unsigned char> record(stride);
        for (std::size_t n = 0; n < vertex_count; ++n) {
            in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(stride));
            if (static_cast<std::size_t>(in.gcount()) != stride)
                fail(path, "truncated vertex data");
            cloud.points.emplace_back(
                ply_read_number(record.data() + offsets[ix], props[ix].type),
                ply_read_number(record.data() + offsets[iy], props[iy].type),
                ply_read_number(record.data() + offsets[iz], props[iz].type));
            const double lv = ply_read_number(record.data() + offsets[ilabel], label_type);
            cloud.labels.push_back(label_from_int(static_cast<long>(lv), path, n + 1));
        }
    } else {
        for (std::size_t n = 0; n < vertex_count; ++n) {
            if (!std::getline(in, line)) fail(path, "truncated vertex data");
            std::istringstream ls(line);
            std::vector<double> values(props.size());
            for (auto& v : values)
                if (!(ls >> v)) fail(path, "row " + std::to_string(n + 1) + ": bad vertex line");
            cloud.points.emplace_back(values[ix], values[iy], values[iz]);
            cloud.labels.push_back(label_from_int(static_cast<long>(values[ilabel]), path, n + 1));
        }
    }
    return cloud;
}

}  // namespace

LabeledCloud load_cloud(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw InputError("cannot open cloud file: " + path.string());
    char magic[3] = {0, 0, 0};
    probe.read(magic, 3);
    probe.close();
    if (magic[0] == 'p' && magic[1] == 'l' && magic[2] == 'y') return load_cloud_ply(path);
    return load_cloud_csv(path);
}

MapPoles load_map(const std::filesystem::path& path) {
    const auto j = load_json(path);
    if (!j.is_array()) fail(path, "map must be a JSON array of [E, N] pairs");
    MapPoles poles;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number())
            fail(path, "map entries must be [E, N] number pairs");
        poles.emplace_back(entry[0].get<double>(), entry[1].get<double>());
    }
    return poles;
}

Pose load_pose(const std::filesystem::path& path) {
    const auto j = load_json(path);
    if (!j.is_object() || !j.contains("rotation") || !j.contains("translation"))
        fail(path, "pose must be {\"rotation\": [9 values], \"translation\": [3 values]}");
    const auto& rot = j["rotation"];
    const auto& tr = j["translation"];
    if (!rot.is_array() || rot.size() != 9 || !tr.is_array() || tr.size() != 3)
        fail(path, "rotation must have 9 row-major values and translation 3");
    Pose pose;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot[3 * r + c].get<double>();
    for (int k = 0; k < 3; ++k) pose.translation[k] = tr[k].get<double>();
    validate_pose(pose);
    return pose;
}

CameraModel load_camera(const std::filesystem::path& path) {
    const auto j = load_json(path);
    CameraModel cam;
    for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"})
        if (!j.contains(key) || !j[key].is_number())
            fail(path, std::string("camera must provide numeric \"") + key + "\"");
    cam.fx = j["fx"].get<double>();
    cam.fy = j["fy"].get<double>();
    cam.cx = j["cx"].get<double>();
    cam.cy = j["cy"].get<double>();
    cam.width = j["width"].get<int>();
    cam.height = j["height"].get<int>();
    validate_camera(cam);
    return cam;
}

SemanticMask load_mask(const std::filesystem::path& path, std::set<int> pole_classes,
                       std::set<int> ground_classes) {
    SemanticMask mask;
    mask.raster = read_image(path);
    if (mask.raster.channels != 1) fail(path, "semantic mask must be single channel");
    mask.pole_classes = std::move(pole_classes);
    mask.ground_classes = std::move(ground_classes);
    return mask;
}

}  // namespace annofuse
