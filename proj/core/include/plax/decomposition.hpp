#ifndef PLAX_DECOMPOSITION_HPP
#define PLAX_DECOMPOSITION_HPP

#include <optional>
#include <vector>

#include "plax/correspondence.hpp"
#include "plax/estimation.hpp"
#include "plax/geometry.hpp"
#include "plax/map_grid.hpp"

namespace plax {

/// One {R, t/D, n} hypothesis explaining a calibrated homography as
/// R + (t/D) n^T up to positive scale. When the homography is (near) a pure
/// rotation the translation is zero and the normal is undefined.
struct DecompositionCandidate {
    Mat3 rotation = Mat3::Identity();
    Vec3 scaled_translation = Vec3::Zero(); // t / D_pi
    Vec3 normal = Vec3::Zero();
    bool pure_rotation = false;
};

/// Pixel-scaled translation T = K t (or K t/D when only the scaled
/// translation is known; the epipole and T_Z/D ratios are scale free).
struct ScaledTranslation {
    Vec3 t = Vec3::Zero();

    static ScaledTranslation from(const CameraIntrinsics& K, const Vec3& translation) {
        return {K.matrix() * translation};
    }
    double t_z() const { return t.z(); }
    /// Finite epipole T/T_Z, or at_infinity when |T_Z| is negligible
    /// against |T|.
    Epipole epipole() const;
};

struct DecomposeOptions {
    /// ||M^T M / d2^2 - I||_F below this declares a pure rotation.
    double pure_rotation_tolerance = 1e-6;
    /// Candidates must recompose to the input within this Frobenius
    /// distance (both sides normalized).
    double recomposition_tolerance = 1e-8;
};

/// SVD-based analytic decomposition (Faugeras/Lustman family) of a
/// plane-induced homography into the standard 4-fold ambiguity.
std::vector<DecompositionCandidate> decompose_homography(const PlanarHomography& h,
                                                         const CameraIntrinsics& K,
                                                         const DecomposeOptions& opts = {});

/// The homography a candidate recomposes to, K (R + t' n^T) K^-1 normalized.
PlanarHomography recompose(const DecompositionCandidate& c, const CameraIntrinsics& K);

/// Linear two-view triangulation of a match under (R, t): depths (Z_b, Z_a)
/// solving Z_a x_a = Z_b R x_b + t in the least-squares sense.
std::optional<std::pair<double, double>> triangulate_depths(const CameraIntrinsics& K,
                                                            const Mat3& rotation,
                                                            const Vec3& translation,
                                                            const Correspondence& m);

/// Cheirality vote: the candidate with the most matches triangulating to
/// positive depth in both frames; ties broken by the largest n . prior.
DecompositionCandidate select_solution(const std::vector<DecompositionCandidate>& candidates,
                                       const CorrespondenceSet& matches,
                                       const CameraIntrinsics& K,
                                       const Vec3& normal_prior = Vec3(0.0, -1.0, 0.0));

struct InfinityDepthOptions {
    double min_parallax = 0.25; // pixels against the rotation-only warp
};

/// Depth of one match from the rotation-only (plane at infinity) warp and
/// the pixel-scaled translation. Derived from Z_a p_a = K R K^-1 Z_b p_b + T:
/// the residual against the infinity warp obeys
///   Z_b q_z (p_a - p_inf) = (T_x, T_y) - T_Z p_a,
/// solved for Z_b along the parallax direction; Z_a = q_z Z_b + T_Z.
/// Returns (Z_b, Z_a); nullopt when the parallax is below min_parallax or
/// the warp is degenerate.
std::optional<std::pair<double, double>> infinity_depth(const CameraIntrinsics& K,
                                                        const Mat3& rotation,
                                                        const ScaledTranslation& T,
                                                        const Correspondence& m,
                                                        const InfinityDepthOptions& opts = {});

/// Sparse reference-frame depth map (Z_a at round(p_a)) for all static
/// matches. Throws NoEgoMotion when |T| ~ 0.
DepthMap plane_at_infinity_depth(const CorrespondenceSet& matches,
                                 const CameraIntrinsics& K,
                                 const Mat3& rotation,
                                 const ScaledTranslation& T,
                                 const InfinityDepthOptions& opts = {});

} // namespace plax

#endif
