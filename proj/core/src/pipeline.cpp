#include "plax/pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace plax {

namespace {

// Robust pixel-noise estimate from the symmetric transfer errors of the
// RANSAC inliers. Each inlier error is the sum of two 2D residual norms,
// ~2.5 sigma in expectation for Gaussian noise.
double estimate_noise_sigma(const CorrespondenceSet& matches, const RansacResult& ransac) {
    const Mat3 h = ransac.homography.matrix();
    const double det = h.determinant();
    if (std::abs(det) < 1e-15) return 0.0;
    const Mat3 hi = h.inverse();
    std::vector<double> errors;
    errors.reserve(ransac.n_inliers);
    for (std::size_t i = 0; i < matches.items.size(); ++i) {
        if (!ransac.inlier_mask[i]) continue;
        const auto& m = matches.items[i];
        Vec2 fwd, bwd;
        if (!try_warp(h, m.p_b, fwd) || !try_warp(hi, m.p_a, bwd)) continue;
        errors.push_back((fwd - m.p_a).norm() + (bwd - m.p_b).norm());
    }
    if (errors.empty()) return 0.0;
    std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
    return errors[errors.size() / 2] / 2.5;
}

} // namespace

PipelineResult estimate_pipeline(const CorrespondenceSet& matches, const CameraIntrinsics& K,
                                 const PipelineOptions& opts) {
    PipelineResult out;
    RansacParams params;
    params.seed = opts.seed;
    params.inlier_threshold = opts.ransac_threshold;
    out.ransac = ransac_homography(matches, params);
    out.homography = out.ransac.homography;

    out.noise_sigma_px = estimate_noise_sigma(matches, out.ransac);
    out.active_parallax = std::max(opts.min_parallax, 4.0 * out.noise_sigma_px);

    bool have_residual_epipole = false;
    try {
        const auto pairs = residual_pairs(out.homography, matches, out.active_parallax);
        EpipoleOptions eopts;
        eopts.min_parallax = out.active_parallax;
        const Epipole e = estimate_epipole(pairs, eopts);
        if (e.is_finite()) {
            out.epipole = e;
            out.epipole_source = "residual_parallax";
            have_residual_epipole = true;
        }
    } catch (const NoParallax&) {
        // all-planar or motionless scene; the decomposition decides below
    }

    if (have_residual_epipole) {
        std::size_t n_static = 0;
        for (const auto& m : matches.items) n_static += m.is_static;
        if (n_static >= 8) {
            RefineOptions ropts;
            ropts.min_parallax = out.active_parallax;
            ropts.alternate_epipole = opts.alternate_epipole;
            const RefineResult refined =
                refine_homography_parallax(out.homography, matches, out.epipole, ropts);
            out.homography = refined.homography;
            out.objective_log = refined.objective_log;
            out.epipole = refined.epipole;
            out.refined = true;
        }
    }

    // Odometry and plane come from the plane-consensus fit: the parallax
    // refinement trades third-row accuracy for epipolar consistency, which
    // is what warping wants but poison for decomposition.
    const auto candidates = decompose_homography(out.ransac.homography, K);
    out.candidate = select_solution(candidates, matches, K, opts.normal_prior);
    if (out.candidate.pure_rotation) {
        throw NoEgoMotion("homography is a pure rotation: no ego-motion, structure undefined");
    }
    const ScaledTranslation t_scaled{K.matrix() * out.candidate.scaled_translation};
    out.k_scale = t_scaled.t_z();
    const Epipole e_dec = t_scaled.epipole();
    if (!have_residual_epipole) {
        if (!e_dec.is_finite()) {
            throw NoEgoMotion("epipole at infinity: ego-motion has no forward component");
        }
        out.epipole = e_dec;
        out.epipole_source = "decomposition";
    } else {
        out.epipole.t_z_sign = e_dec.t_z_sign;
    }
    return out;
}

} // namespace plax
