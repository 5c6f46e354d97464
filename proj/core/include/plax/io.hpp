#ifndef PLAX_IO_HPP
#define PLAX_IO_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "plax/correspondence.hpp"
#include "plax/estimation.hpp"
#include "plax/geometry.hpp"
#include "plax/map_grid.hpp"
#include "plax/synthetic.hpp"

namespace plax {

/// Shortest decimal form that round-trips the exact double.
std::string to_string_shortest(double value);

/// PFM, grayscale "Pf": 32-bit little-endian floats, bottom-up scanlines,
/// scale -1.0. Invalid cells are NaN.
void write_pfm(const std::filesystem::path& path, const MapGrid& map);
MapGrid read_pfm(const std::filesystem::path& path);

struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // nonzero = set
};

/// Binary 8-bit PGM (P5); nonzero = in mask.
void write_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask,
               int width, int height);
MaskImage read_pgm(const std::filesystem::path& path);

/// CSV with header u_b,v_b,u_a,v_a,is_static; full-precision floats.
void write_correspondences_csv(const std::filesystem::path& path, const CorrespondenceSet& set);
CorrespondenceSet read_correspondences_csv(const std::filesystem::path& path);

/// Plain text, 4 whitespace-separated numbers: fx fy cx cy.
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& K);
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);

/// 12 numbers, row-major [R|t].
void write_pose(const std::filesystem::path& path, const RigidPose& pose);
RigidPose read_pose(const std::filesystem::path& path);

/// 4 numbers: nx ny nz distance.
void write_plane(const std::filesystem::path& path, const ReferencePlane& plane);
ReferencePlane read_plane(const std::filesystem::path& path);

/// 9 numbers, row-major, normalized on read.
void write_homography(const std::filesystem::path& path, const PlanarHomography& h);
PlanarHomography read_homography(const std::filesystem::path& path);

struct EpipoleInfo {
    Epipole epipole;
    double k_scale = std::numeric_limits<double>::quiet_NaN(); // T_Z/D when known
};

/// key=value lines: status, e_x, e_y, t_z_sign, k_scale.
void write_epipole_file(const std::filesystem::path& path, const EpipoleInfo& info);
EpipoleInfo read_epipole_file(const std::filesystem::path& path);

/// Flat key=value scene description; "box" and "dynamic" keys may repeat.
std::string serialize_scene_config(const SceneConfig& cfg);
SceneConfig parse_scene_config(const std::string& text);
SceneConfig read_scene_config(const std::filesystem::path& path);

/// Full oracle serialization: config, intrinsics, pose, plane,
/// correspondences, truth homography/epipole/maps, and a manifest with the
/// self-check results.
void write_scene_dir(const OracleScene& scene, const std::filesystem::path& dir);

} // namespace plax

#endif
