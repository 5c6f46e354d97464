#ifndef PLAX_SYNTHETIC_HPP
#define PLAX_SYNTHETIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "plax/correspondence.hpp"
#include "plax/decomposition.hpp"
#include "plax/estimation.hpp"
#include "plax/geometry.hpp"
#include "plax/map_grid.hpp"

namespace plax {

/// Axis-aligned box resting on the ground plane, world (= frame b) coords.
/// center_x/center_z locate its footprint center on the plane; size_y is
/// its height above the plane.
struct BoxSpec {
    double center_x = 0.0;
    double center_z = 10.0;
    double size_x = 2.0;
    double size_y = 2.0;
    double size_z = 2.0;
};

/// Independently moving point: world position at the reference time (frame
/// a) and the displacement it travelled since frame b, world coords.
struct DynamicPointSpec {
    Vec3 position = Vec3::Zero();
    Vec3 displacement = Vec3::Zero();
};

struct SceneConfig {
    int width = 1242;
    int height = 375;
    CameraIntrinsics intrinsics{721.5, 721.5, 609.6, 172.9};
    /// Ground plane in frame b. Downward normal, camera 1.5 m above.
    ReferencePlane plane{Vec3(0.0, -1.0, 0.0), 1.5};
    int n_plane_points = 200;
    int n_offplane_points = 0; // needs boxes to sample from
    std::vector<BoxSpec> boxes;
    /// Ego motion: pose of camera a expressed in frame b (camera position
    /// shift and attitude change). Converted internally to the b->a map.
    Vec3 ego_translation = Vec3(0.0, 0.0, 1.0);
    Vec3 ego_rotation_ypr = Vec3::Zero(); // yaw, pitch, roll in radians
    std::vector<DynamicPointSpec> dynamic_points;
    double noise_px = 0.0;
    double outlier_fraction = 0.0;
    std::uint64_t seed = 1;
    double min_depth = 4.0;
    double max_depth = 60.0;
    double margin_px = 6.0;

    /// Default driving scene: three boxes of different heights ahead of the
    /// camera, forward motion with a slight yaw.
    static SceneConfig default_driving();

    RigidPose pose_a_from_b() const;
};

/// Per-point ground truth, all in exact (pre-noise) quantities.
struct PointTruth {
    Vec3 position_b = Vec3::Zero(); // frame b coords (at frame-b time)
    Vec2 p_b = Vec2::Zero();
    Vec2 p_a = Vec2::Zero(); // integer-valued for static points
    double z_a = 0.0;
    double z_b = 0.0;
    double height = 0.0; // above the reference plane
    double gamma = 0.0;  // height / z_a
    bool is_static = true;
};

struct OracleScene {
    SceneConfig config;
    CorrespondenceSet correspondences; // noise/outliers applied per config
    std::vector<PointTruth> truths;    // aligned with correspondences.items
    PlanarHomography true_homography;
    Mat3 true_homography_raw = Mat3::Identity(); // natural scale of Eq. 10a
    Epipole true_epipole;
    ScaledTranslation true_scaled_translation; // K t, metric scale
    double true_k_scale = 0.0;                 // T_Z / D_pi
    StructureMap true_structure;
    DepthMap true_depth;
    RigidPose true_pose; // b -> a

    ReferencePlane plane_in_a() const;
};

/// Deterministic scene generation. Static points are sampled so their
/// frame-a projection lands exactly on integer pixels (the ground-truth
/// raster), on the plane or on box surfaces. Throws InfeasibleConfig when
/// the requested counts cannot be placed in both frusta.
OracleScene generate_scene(const SceneConfig& cfg);

/// Truth maps rasterized at the (exact) target pixels: depth Z_a and
/// gamma = H/Z_a.
std::pair<DepthMap, StructureMap> ground_truth_maps(const OracleScene& scene);

/// Apply pixel noise and uniform in-image outliers to the target pixels of
/// a correspondence set; round(fraction * n) items are replaced. The
/// original set is not modified.
CorrespondenceSet perturb(const CorrespondenceSet& clean, double noise_px,
                          double outlier_fraction, std::uint64_t seed);

/// Results of the oracle's internal consistency checks (used by the scene
/// manifest and the test suite).
struct SelfCheck {
    double max_on_plane_warp_error = 0.0;   // |warp(A, p_b) - p_a|, on-plane
    double max_parallax_equation_error = 0.0; // Eq. 14 with true gamma/e/k
    double max_depth_ratio_error = 0.0;     // Z_a/Z_b identity vs a3, H, T_Z
    double min_gamma = 0.0;
    double max_gamma = 0.0;
    std::size_t n_static = 0;
    std::size_t n_dynamic = 0;
};

SelfCheck self_check(const OracleScene& scene);

} // namespace plax

#endif
