#ifndef PLAX_PIPELINE_HPP
#define PLAX_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "plax/correspondence.hpp"
#include "plax/decomposition.hpp"
#include "plax/estimation.hpp"
#include "plax/geometry.hpp"

namespace plax {

struct PipelineOptions {
    std::uint64_t seed = 0;
    double ransac_threshold = 1.0;
    double min_parallax = 0.25;
    bool alternate_epipole = false;
    Vec3 normal_prior = Vec3(0.0, -1.0, 0.0);
};

struct PipelineResult {
    RansacResult ransac;
    PlanarHomography homography; // refined when refinement ran
    bool refined = false;
    std::vector<double> objective_log;
    Epipole epipole; // the one used downstream
    std::string epipole_source;
    DecompositionCandidate candidate;
    double k_scale = 0.0;        // T_Z / D_pi of the selected candidate
    double noise_sigma_px = 0.0; // estimated from the RANSAC inlier residuals
    double active_parallax = 0.25;
};

/// The estimation chain: RANSAC init, residual-intersection epipole,
/// epipole-constrained refinement, decomposition with cheirality selection.
/// The residual active set uses a noise-adaptive parallax threshold
/// (floored at min_parallax) so noise-dominated directions do not steer the
/// epipole or the refinement. Throws NoEgoMotion when the scene provides
/// none.
PipelineResult estimate_pipeline(const CorrespondenceSet& matches, const CameraIntrinsics& K,
                                 const PipelineOptions& opts = {});

} // namespace plax

#endif
