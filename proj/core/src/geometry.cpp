#include "plax/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace plax {

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_, double cy_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw Error("camera focal lengths must be positive");
    }
}

Mat3 CameraIntrinsics::matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
    Mat3 ki;
    ki << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
    return ki;
}

RigidPose RigidPose::validated(const Mat3& rotation, const Vec3& translation) {
    const double orth = (rotation.transpose() * rotation - Mat3::Identity()).norm();
    if (orth > 1e-12 * 10.0) {
        throw Error("rotation is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > 1e-11) {
        throw Error("rotation determinant is not +1");
    }
    RigidPose pose;
    pose.rotation = rotation;
    pose.translation = translation;
    return pose;
}

RigidPose RigidPose::inverse() const {
    RigidPose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
}

RigidPose compose(const RigidPose& second, const RigidPose& first) {
    RigidPose out;
    out.rotation = second.rotation * first.rotation;
    out.translation = second.rotation * first.translation + second.translation;
    return out;
}

ReferencePlane::ReferencePlane(const Vec3& normal_, double distance_)
    : normal(normal_), distance(distance_) {
    const double n = normal.norm();
    if (!(n > 0.0)) {
        throw Error("plane normal must be nonzero");
    }
    if (std::abs(n - 1.0) > 1e-9) {
        throw Error("plane normal must be unit length");
    }
    normal /= n;
    if (!(distance > 0.0)) {
        throw Error("plane distance must be positive");
    }
}

double plane_height(const ReferencePlane& plane, const Vec3& p) {
    return plane.normal.dot(p) - plane.distance;
}

ReferencePlane transform_plane(const RigidPose& pose, const ReferencePlane& plane) {
    const Vec3 n = pose.rotation * plane.normal;
    const double d = plane.distance + n.dot(pose.translation);
    if (!(d > 0.0)) {
        throw Error("transformed plane distance is not positive; frame is on or below the plane");
    }
    return ReferencePlane(n, d);
}

ScenePoint ScenePoint::on_ray(const ReferencePlane& plane, const Vec3& position) {
    ScenePoint sp;
    sp.position = position;
    sp.depth = position.z();
    sp.plane_height = plax::plane_height(plane, position);
    return sp;
}

PlanarHomography::PlanarHomography(const Mat3& any_scale) {
    const double norm = any_scale.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error("homography matrix must be finite and nonzero");
    }
    m_ = any_scale / norm;
    // Sign convention: bottom-right entry nonnegative; fall back to the
    // first nonzero entry in row-major order when it vanishes.
    double pivot = m_(2, 2);
    if (std::abs(pivot) < 1e-14) {
        for (int r = 0; r < 3 && std::abs(pivot) < 1e-14; ++r) {
            for (int c = 0; c < 3 && std::abs(pivot) < 1e-14; ++c) {
                pivot = m_(r, c);
            }
        }
    }
    if (pivot < 0.0) m_ = -m_;
}

PlanarHomography PlanarHomography::inverse() const {
    const double det = m_.determinant();
    if (std::abs(det) < 1e-15) {
        throw DegenerateConfiguration("homography is singular, cannot invert");
    }
    return PlanarHomography(Mat3(m_.inverse()));
}

Vec2 project(const CameraIntrinsics& K, const Vec3& p) {
    if (!(p.z() > 0.0)) {
        throw NonPositiveDepth("cannot project point with Z <= 0");
    }
    return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

Vec3 unproject_ray(const CameraIntrinsics& K, const Vec2& pixel) {
    return {(pixel.x() - K.cx) / K.fx, (pixel.y() - K.cy) / K.fy, 1.0};
}

Mat3 plane_induced_homography_raw(const CameraIntrinsics& K,
                                  const RigidPose& pose_a_from_b,
                                  const ReferencePlane& plane_b) {
    const Mat3 core = pose_a_from_b.rotation +
                      (pose_a_from_b.translation * plane_b.normal.transpose()) / plane_b.distance;
    return K.matrix() * core * K.inverse_matrix();
}

PlanarHomography plane_induced_homography(const CameraIntrinsics& K,
                                          const RigidPose& pose_a_from_b,
                                          const ReferencePlane& plane_b) {
    return PlanarHomography(plane_induced_homography_raw(K, pose_a_from_b, plane_b));
}

bool try_warp(const Mat3& h, const Vec2& pixel, Vec2& out) {
    const Vec3 q = h * Vec3(pixel.x(), pixel.y(), 1.0);
    if (std::abs(q.z()) < 1e-12) return false;
    out = {q.x() / q.z(), q.y() / q.z()};
    return true;
}

Vec2 warp(const PlanarHomography& h, const Vec2& pixel) {
    Vec2 out;
    if (!try_warp(h.matrix(), pixel, out)) {
        throw DegenerateWarp("warp denominator vanished");
    }
    return out;
}

} // namespace plax
