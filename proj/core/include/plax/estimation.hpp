#ifndef PLAX_ESTIMATION_HPP
#define PLAX_ESTIMATION_HPP

#include <cstdint>
#include <vector>

#include "plax/correspondence.hpp"
#include "plax/geometry.hpp"

namespace plax {

/// Image position of the other camera center. The at_infinity state stands
/// in for |T_Z| ~ 0 (residual parallax field is parallel, no finite
/// intersection). t_z_sign is +1/-1 when known, 0 when unobservable.
struct Epipole {
    enum class State { finite, at_infinity };

    State state = State::finite;
    Vec2 position = Vec2::Zero();
    int t_z_sign = 0;

    static Epipole finite(const Vec2& e, int t_z_sign = 0) {
        return {State::finite, e, t_z_sign};
    }
    static Epipole at_infinity() { return {State::at_infinity, Vec2::Zero(), 0}; }

    bool is_finite() const { return state == State::finite; }
};

struct RansacParams {
    int max_iterations = 2000;
    double inlier_threshold = 1.0; // pixels, symmetric transfer error
    double confidence = 0.999;
    std::uint64_t seed = 0;

    void validate() const;
};

struct RansacResult {
    PlanarHomography homography;
    std::vector<std::uint8_t> inlier_mask; // one entry per input correspondence
    std::size_t n_inliers = 0;
    int best_iteration = -1;
    int iterations_run = 0;
    /// Threshold the final mask was scored at: the configured threshold, or
    /// the noise-widened one when the consensus residuals call for it.
    double final_threshold = 0.0;
};

/// Algebraic least-squares homography (normalized DLT). Needs >= 4 matches
/// with no 3 source points collinear; interpolates exactly for 4.
/// Dynamic matches are ignored.
PlanarHomography dlt_homography(const std::vector<Correspondence>& matches);

/// |warp(H, p_b) - p_a| + |warp(H^-1, p_a) - p_b| in pixels.
double symmetric_transfer_error(const PlanarHomography& h, const Correspondence& m);

/// Consensus estimation over the static matches, deterministic for a fixed
/// seed; refits on all inliers of the best sample and rescores.
RansacResult ransac_homography(const CorrespondenceSet& matches, const RansacParams& params);

/// One residual parallax observation: warped source pixel and its target.
struct ResidualPair {
    Vec2 p_w = Vec2::Zero();
    Vec2 p_a = Vec2::Zero();
};

struct EpipoleOptions {
    double min_parallax = 0.25;        // pixels; shorter residuals are direction noise
    double rank_tolerance = 1e-9;      // relative eigenvalue ratio of the normal equations
};

/// Least-squares point minimizing the squared distances to all residual
/// parallax lines. Returns at_infinity when the lines are (near) parallel.
/// Throws NoParallax when fewer than 2 residuals exceed min_parallax.
Epipole estimate_epipole(const std::vector<ResidualPair>& residuals,
                         const EpipoleOptions& opts = {});

struct RefineOptions {
    int max_iterations = 100;
    double step_tolerance = 1e-10;
    double min_parallax = 0.25;     // active-set threshold, fixed at H0
    double damping_init = 1e-6;
    double damping_cap = 1e12;
    bool alternate_epipole = false; // re-estimate e between damped solves
    int alternate_rounds = 3;
};

struct RefineResult {
    PlanarHomography homography;
    std::vector<double> objective_log; // accepted objective values, first entry = H0
    Epipole epipole;                   // input e, or the last re-estimate when alternating
    int iterations = 0;
};

/// Damped least-squares refinement of the 8 free homography entries
/// (bottom-right entry held fixed) minimizing the squared distances of the
/// residual parallax lines to the epipole. Objective is non-increasing over
/// accepted steps.
RefineResult refine_homography_parallax(const PlanarHomography& h0,
                                        const CorrespondenceSet& matches,
                                        const Epipole& epipole,
                                        const RefineOptions& opts = {});

/// The refinement objective at a fixed homography (sum of squared
/// line-to-epipole distances over the same active set rule).
double parallax_line_objective(const PlanarHomography& h,
                               const CorrespondenceSet& matches,
                               const Epipole& epipole,
                               double min_parallax = 0.25);

/// Residual pairs (p_w, p_a) for all static matches whose parallax under h
/// exceeds min_parallax.
std::vector<ResidualPair> residual_pairs(const PlanarHomography& h,
                                         const CorrespondenceSet& matches,
                                         double min_parallax = 0.25);

} // namespace plax

#endif
