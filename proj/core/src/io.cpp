#include "plax/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace plax {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> parse_numbers(const std::string& text, std::size_t expected,
                                  const std::string& what) {
    std::istringstream ss(text);
    std::vector<double> out;
    double v;
    while (ss >> v) out.push_back(v);
    if (out.size() != expected) {
        throw IoError(what + ": expected " + std::to_string(expected) + " numbers, found " +
                      std::to_string(out.size()));
    }
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
        if (used != s.size()) throw IoError(what + ": trailing characters in '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw IoError(what + ": not a number: '" + s + "'");
    } catch (const std::out_of_range&) {
        throw IoError(what + ": out of range: '" + s + "'");
    }
}

} // namespace

std::string to_string_shortest(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_pfm(const std::filesystem::path& path, const MapGrid& map) {
    static_assert(std::endian::native == std::endian::little,
                  "PFM writer assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
    std::vector<float> row(map.width);
    for (int y = map.height - 1; y >= 0; --y) { // bottom-up scanlines
        for (int x = 0; x < map.width; ++x) {
            row[x] = map.is_valid(x, y) ? static_cast<float>(map.at(x, y))
                                        : std::numeric_limits<float>::quiet_NaN();
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw IoError("short write to " + path.string());
}

MapGrid read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "Pf") {
        throw IoError(path.string() + ": expected grayscale PFM magic 'Pf', got '" + magic + "'");
    }
    int w = 0, h = 0;
    double scale = 0.0;
    in >> w >> h >> scale;
    if (!in || w <= 0 || h <= 0 || scale == 0.0) {
        throw IoError(path.string() + ": malformed PFM header");
    }
    in.get(); // single whitespace byte after the scale
    const bool little = scale < 0.0;
    MapGrid map(w, h);
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * 4);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw IoError(path.string() + ": truncated PFM data");
        for (int x = 0; x < w; ++x) {
            unsigned char b[4];
            std::memcpy(b, row.data() + 4 * x, 4);
            if (!little) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
            float f;
            std::memcpy(&f, b, 4);
            if (std::isnan(f)) {
                map.set_invalid(x, y);
            } else {
                map.set(x, y, static_cast<double>(f));
            }
        }
    }
    return map;
}

void write_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask,
               int width, int height) {
    if (mask.size() != static_cast<std::size_t>(width) * height) {
        throw IoError("mask size does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<std::uint8_t> bytes(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask[i] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

MaskImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5") throw IoError(path.string() + ": expected binary PGM (P5)");
    const auto next_token = [&]() {
        std::string tok;
        for (;;) {
            if (!(in >> tok)) throw IoError(path.string() + ": malformed PGM header");
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
    };
    MaskImage img;
    img.width = std::stoi(next_token());
    img.height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255) {
        throw IoError(path.string() + ": unsupported PGM header");
    }
    in.get();
    img.data.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (!in) throw IoError(path.string() + ": truncated PGM data");
    return img;
}

void write_correspondences_csv(const std::filesystem::path& path, const CorrespondenceSet& set) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "u_b,v_b,u_a,v_a,is_static\n";
    for (const auto& m : set.items) {
        out << to_string_shortest(m.p_b.x()) << ',' << to_string_shortest(m.p_b.y()) << ','
            << to_string_shortest(m.p_a.x()) << ',' << to_string_shortest(m.p_a.y()) << ','
            << (m.is_static ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("short write to " + path.string());
}

CorrespondenceSet read_correspondences_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "u_b,v_b,u_a,v_a,is_static") {
        throw IoError(path.string() + ": unexpected CSV header '" + line + "'");
    }
    CorrespondenceSet set;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        double vals[4];
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(ss, field, ',')) {
                throw IoError(path.string() + ": short row at line " + std::to_string(line_no));
            }
            vals[i] = parse_double(field, path.string() + " line " + std::to_string(line_no));
        }
        if (!std::getline(ss, field, ',')) {
            throw IoError(path.string() + ": short row at line " + std::to_string(line_no));
        }
        Correspondence m;
        m.p_b = {vals[0], vals[1]};
        m.p_a = {vals[2], vals[3]};
        m.is_static = (std::stoi(field) != 0);
        if (!m.p_b.allFinite() || !m.p_a.allFinite()) {
            throw IoError(path.string() + ": non-finite coordinates at line " +
                          std::to_string(line_no));
        }
        set.items.push_back(m);
    }
    return set;
}

void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& K) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_string_shortest(K.fx) << ' ' << to_string_shortest(K.fy) << ' '
        << to_string_shortest(K.cx) << ' ' << to_string_shortest(K.cy) << '\n';
}

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
    const auto v = parse_numbers(read_file(path), 4, path.string());
    return CameraIntrinsics(v[0], v[1], v[2], v[3]);
}

void write_pose(const std::filesystem::path& path, const RigidPose& pose) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out << to_string_shortest(pose.rotation(r, c)) << ' ';
        out << to_string_shortest(pose.translation(r)) << '\n';
    }
}

RigidPose read_pose(const std::filesystem::path& path) {
    const auto v = parse_numbers(read_file(path), 12, path.string());
    Mat3 r;
    Vec3 t;
    for (int row = 0; row < 3; ++row) {
        r(row, 0) = v[4 * row];
        r(row, 1) = v[4 * row + 1];
        r(row, 2) = v[4 * row + 2];
        t(row) = v[4 * row + 3];
    }
    return RigidPose::validated(r, t);
}

void write_plane(const std::filesystem::path& path, const ReferencePlane& plane) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_string_shortest(plane.normal.x()) << ' ' << to_string_shortest(plane.normal.y())
        << ' ' << to_string_shortest(plane.normal.z()) << ' '
        << to_string_shortest(plane.distance) << '\n';
}

ReferencePlane read_plane(const std::filesystem::path& path) {
    const auto v = parse_numbers(read_file(path), 4, path.string());
    return ReferencePlane(Vec3(v[0], v[1], v[2]), v[3]);
}

void write_homography(const std::filesystem::path& path, const PlanarHomography& h) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    const Mat3& m = h.matrix();
    for (int r = 0; r < 3; ++r) {
        out << to_string_shortest(m(r, 0)) << ' ' << to_string_shortest(m(r, 1)) << ' '
            << to_string_shortest(m(r, 2)) << '\n';
    }
}

PlanarHomography read_homography(const std::filesystem::path& path) {
    const auto v = parse_numbers(read_file(path), 9, path.string());
    Mat3 m;
    m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
    return PlanarHomography(m);
}

void write_epipole_file(const std::filesystem::path& path, const EpipoleInfo& info) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    if (info.epipole.is_finite()) {
        out << "status=finite\n";
        out << "e_x=" << to_string_shortest(info.epipole.position.x()) << '\n';
        out << "e_y=" << to_string_shortest(info.epipole.position.y()) << '\n';
    } else {
        out << "status=at_infinity\n";
    }
    out << "t_z_sign=" << info.epipole.t_z_sign << '\n';
    if (std::isfinite(info.k_scale)) {
        out << "k_scale=" << to_string_shortest(info.k_scale) << '\n';
    }
}

namespace {

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) out.emplace_back(key, value);
    }
    return out;
}

} // namespace

EpipoleInfo read_epipole_file(const std::filesystem::path& path) {
    EpipoleInfo info;
    std::string status;
    double ex = 0.0, ey = 0.0;
    bool have_e = false;
    for (const auto& [key, value] : parse_key_values(read_file(path))) {
        if (key == "status") status = value;
        else if (key == "e_x") { ex = parse_double(value, "e_x"); have_e = true; }
        else if (key == "e_y") { ey = parse_double(value, "e_y"); have_e = true; }
        else if (key == "t_z_sign") info.epipole.t_z_sign = std::stoi(value);
        else if (key == "k_scale") info.k_scale = parse_double(value, "k_scale");
    }
    if (status == "finite") {
        if (!have_e) throw IoError(path.string() + ": finite epipole without coordinates");
        const int sign = info.epipole.t_z_sign;
        info.epipole = Epipole::finite({ex, ey}, sign);
    } else if (status == "at_infinity") {
        const int sign = info.epipole.t_z_sign;
        info.epipole = Epipole::at_infinity();
        info.epipole.t_z_sign = sign;
    } else {
        throw IoError(path.string() + ": unknown epipole status '" + status + "'");
    }
    return info;
}

std::string serialize_scene_config(const SceneConfig& cfg) {
    std::ostringstream out;
    const auto kv = [&](const char* key, double v) {
        out << key << "=" << to_string_shortest(v) << '\n';
    };
    out << "width=" << cfg.width << '\n';
    out << "height=" << cfg.height << '\n';
    kv("fx", cfg.intrinsics.fx);
    kv("fy", cfg.intrinsics.fy);
    kv("cx", cfg.intrinsics.cx);
    kv("cy", cfg.intrinsics.cy);
    kv("plane_nx", cfg.plane.normal.x());
    kv("plane_ny", cfg.plane.normal.y());
    kv("plane_nz", cfg.plane.normal.z());
    kv("plane_d", cfg.plane.distance);
    out << "n_plane_points=" << cfg.n_plane_points << '\n';
    out << "n_offplane_points=" << cfg.n_offplane_points << '\n';
    for (const auto& b : cfg.boxes) {
        out << "box=" << to_string_shortest(b.center_x) << ' ' << to_string_shortest(b.center_z)
            << ' ' << to_string_shortest(b.size_x) << ' ' << to_string_shortest(b.size_y) << ' '
            << to_string_shortest(b.size_z) << '\n';
    }
    kv("ego_tx", cfg.ego_translation.x());
    kv("ego_ty", cfg.ego_translation.y());
    kv("ego_tz", cfg.ego_translation.z());
    kv("ego_yaw", cfg.ego_rotation_ypr.x());
    kv("ego_pitch", cfg.ego_rotation_ypr.y());
    kv("ego_roll", cfg.ego_rotation_ypr.z());
    for (const auto& d : cfg.dynamic_points) {
        out << "dynamic=" << to_string_shortest(d.position.x()) << ' '
            << to_string_shortest(d.position.y()) << ' ' << to_string_shortest(d.position.z())
            << ' ' << to_string_shortest(d.displacement.x()) << ' '
            << to_string_shortest(d.displacement.y()) << ' '
            << to_string_shortest(d.displacement.z()) << '\n';
    }
    kv("noise_px", cfg.noise_px);
    kv("outlier_fraction", cfg.outlier_fraction);
    out << "seed=" << cfg.seed << '\n';
    kv("min_depth", cfg.min_depth);
    kv("max_depth", cfg.max_depth);
    kv("margin_px", cfg.margin_px);
    return out.str();
}

SceneConfig parse_scene_config(const std::string& text) {
    SceneConfig cfg;
    cfg.boxes.clear();
    cfg.dynamic_points.clear();
    double nx = cfg.plane.normal.x(), ny = cfg.plane.normal.y(), nz = cfg.plane.normal.z();
    double nd = cfg.plane.distance;
    for (const auto& [key, value] : parse_key_values(text)) {
        if (key == "width") cfg.width = std::stoi(value);
        else if (key == "height") cfg.height = std::stoi(value);
        else if (key == "fx") cfg.intrinsics.fx = parse_double(value, key);
        else if (key == "fy") cfg.intrinsics.fy = parse_double(value, key);
        else if (key == "cx") cfg.intrinsics.cx = parse_double(value, key);
        else if (key == "cy") cfg.intrinsics.cy = parse_double(value, key);
        else if (key == "plane_nx") nx = parse_double(value, key);
        else if (key == "plane_ny") ny = parse_double(value, key);
        else if (key == "plane_nz") nz = parse_double(value, key);
        else if (key == "plane_d") nd = parse_double(value, key);
        else if (key == "n_plane_points") cfg.n_plane_points = std::stoi(value);
        else if (key == "n_offplane_points") cfg.n_offplane_points = std::stoi(value);
        else if (key == "box") {
            const auto v = parse_numbers(value, 5, "box");
            cfg.boxes.push_back({v[0], v[1], v[2], v[3], v[4]});
        } else if (key == "dynamic") {
            const auto v = parse_numbers(value, 6, "dynamic");
            cfg.dynamic_points.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
        }
        else if (key == "ego_tx") cfg.ego_translation.x() = parse_double(value, key);
        else if (key == "ego_ty") cfg.ego_translation.y() = parse_double(value, key);
        else if (key == "ego_tz") cfg.ego_translation.z() = parse_double(value, key);
        else if (key == "ego_yaw") cfg.ego_rotation_ypr.x() = parse_double(value, key);
        else if (key == "ego_pitch") cfg.ego_rotation_ypr.y() = parse_double(value, key);
        else if (key == "ego_roll") cfg.ego_rotation_ypr.z() = parse_double(value, key);
        else if (key == "noise_px") cfg.noise_px = parse_double(value, key);
        else if (key == "outlier_fraction") cfg.outlier_fraction = parse_double(value, key);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "min_depth") cfg.min_depth = parse_double(value, key);
        else if (key == "max_depth") cfg.max_depth = parse_double(value, key);
        else if (key == "margin_px") cfg.margin_px = parse_double(value, key);
        else throw IoError("unknown scene config key '" + key + "'");
    }
    cfg.plane = ReferencePlane(Vec3(nx, ny, nz).normalized(), nd);
    return cfg;
}

SceneConfig read_scene_config(const std::filesystem::path& path) {
    return parse_scene_config(read_file(path));
}

void write_scene_dir(const OracleScene& scene, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream cfg(dir / "config.txt");
    if (!cfg) throw IoError("cannot write " + (dir / "config.txt").string());
    cfg << serialize_scene_config(scene.config);
    cfg.close();

    write_intrinsics(dir / "intrinsics.txt", scene.config.intrinsics);
    write_pose(dir / "pose.txt", scene.true_pose);
    write_plane(dir / "plane.txt", scene.config.plane);
    write_correspondences_csv(dir / "correspondences.csv", scene.correspondences);
    write_homography(dir / "true_homography.txt", scene.true_homography);
    write_epipole_file(dir / "true_epipole.txt", {scene.true_epipole, scene.true_k_scale});
    write_pfm(dir / "true_structure.pfm", scene.true_structure);
    write_pfm(dir / "true_depth.pfm", scene.true_depth);

    const SelfCheck chk = self_check(scene);
    nlohmann::json manifest;
    manifest["seed"] = scene.config.seed;
    manifest["n_correspondences"] = scene.correspondences.items.size();
    manifest["n_static"] = chk.n_static;
    manifest["n_dynamic"] = chk.n_dynamic;
    manifest["max_on_plane_warp_error_px"] = chk.max_on_plane_warp_error;
    manifest["max_parallax_equation_error_px"] = chk.max_parallax_equation_error;
    manifest["max_depth_ratio_error"] = chk.max_depth_ratio_error;
    manifest["gamma_min"] = chk.min_gamma;
    manifest["gamma_max"] = chk.max_gamma;
    manifest["epipole_finite"] = scene.true_epipole.is_finite();
    std::ofstream mf(dir / "manifest.json");
    if (!mf) throw IoError("cannot write " + (dir / "manifest.json").string());
    mf << manifest.dump(2) << '\n';
}

} // namespace plax
