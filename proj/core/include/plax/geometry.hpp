#ifndef PLAX_GEOMETRY_HPP
#define PLAX_GEOMETRY_HPP

#include <Eigen/Core>

#include "plax/errors.hpp"

namespace plax {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera. Right-handed camera frame, z forward; pixel
/// u = fx*X/Z + cx, v = fy*Y/Z + cy.
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    CameraIntrinsics() = default;
    CameraIntrinsics(double fx_, double fy_, double cx_, double cy_);

    Mat3 matrix() const;
    Mat3 inverse_matrix() const;
};

/// Rigid transform P_to = rotation * P_from + translation.
struct RigidPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidPose identity() { return {}; }

    /// Validates orthonormality (R^T R = I, det = +1) to 1e-12.
    static RigidPose validated(const Mat3& rotation, const Vec3& translation);

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidPose inverse() const;
};

/// this_pose after first: compose(b_from_a, c_from_b) maps frame a to c.
RigidPose compose(const RigidPose& second, const RigidPose& first);

/// Plane {P : normal . P = distance}, distance > 0, unit normal, expressed
/// in a stated camera frame.
struct ReferencePlane {
    Vec3 normal = Vec3(0.0, -1.0, 0.0);
    double distance = 1.0;

    ReferencePlane() = default;
    ReferencePlane(const Vec3& normal_, double distance_);
};

/// Signed height of P above the plane: H = n.P - D. Points on the side the
/// normal points away from (above a downward-normal ground) get H < 0.
double plane_height(const ReferencePlane& plane, const Vec3& p);

/// Plane re-expressed in the frame reached by pose (n' = R n,
/// D' = D + n'.t). Plane height of any fixed point is invariant.
ReferencePlane transform_plane(const RigidPose& pose, const ReferencePlane& plane);

/// A 3D point bundled with its depth and height above a reference plane.
struct ScenePoint {
    Vec3 position = Vec3::Zero();
    double depth = 0.0;        // third component of position
    double plane_height = 0.0; // n.P - D for the plane it was built against

    static ScenePoint on_ray(const ReferencePlane& plane, const Vec3& position);
};

/// Plane-induced homography between two frames, stored with Frobenius norm
/// 1 and a sign convention (bottom-right entry >= 0) so equality tests are
/// deterministic.
class PlanarHomography {
public:
    PlanarHomography() : m_(Mat3::Identity() / std::sqrt(3.0)) {}
    explicit PlanarHomography(const Mat3& any_scale);

    const Mat3& matrix() const { return m_; }
    /// Third row a3; the warp denominator is a3 . (u, v, 1).
    Vec3 a3() const { return m_.row(2).transpose(); }

    PlanarHomography inverse() const;

private:
    Mat3 m_;
};

Vec2 project(const CameraIntrinsics& K, const Vec3& p);

/// Homogeneous ray K^-1 (u, v, 1); project(K, s*ray) == p for all s > 0.
Vec3 unproject_ray(const CameraIntrinsics& K, const Vec2& pixel);

/// Closed-form homography K (R + t n^T / D) K^-1 for a pose mapping frame b
/// to frame a and the plane expressed in frame b.
PlanarHomography plane_induced_homography(const CameraIntrinsics& K,
                                          const RigidPose& pose_a_from_b,
                                          const ReferencePlane& plane_b);

/// Same matrix before normalization. Needed where the natural scale
/// matters (the depth-ratio identity uses it).
Mat3 plane_induced_homography_raw(const CameraIntrinsics& K,
                                  const RigidPose& pose_a_from_b,
                                  const ReferencePlane& plane_b);

Vec2 warp(const PlanarHomography& h, const Vec2& pixel);

/// Non-throwing warp used by per-pixel loops; false when the denominator
/// magnitude is below 1e-12.
bool try_warp(const Mat3& h, const Vec2& pixel, Vec2& out);

} // namespace plax

#endif
