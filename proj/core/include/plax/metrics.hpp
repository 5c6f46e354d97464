#ifndef PLAX_METRICS_HPP
#define PLAX_METRICS_HPP

#include <cstdint>
#include <vector>

#include "plax/geometry.hpp"
#include "plax/map_grid.hpp"

namespace plax {

/// The standard monocular-depth error suite (natural logs, SILog x100).
struct MetricsReport {
    double rel = 0.0;
    double sq_rel = 0.0;
    double rmse = 0.0;
    double rmse_log = 0.0;
    double silog = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    std::size_t n_evaluated = 0;
};

struct LossWeights {
    double w_d = 1.0;
    double w_s = 1.0;

    double s_over_d() const {
        if (!(w_d > 0.0)) throw Error("S/D ratio undefined for w_d = 0");
        return w_s / w_d;
    }
};

struct EvalPair {
    const MapGrid* predicted = nullptr;
    const MapGrid* ground_truth = nullptr;
    /// Optional extra mask intersected with both validity masks; empty = none.
    std::vector<std::uint8_t> mask;
};

struct MetricsOptions {
    /// Ground-truth pixels outside this range are excluded up front,
    /// mirroring the prediction range.
    double gt_min = 0.1;
    double gt_max = 100.0;
};

/// Per-pixel metrics over the intersection of validity masks (and the
/// optional extra mask). Throws EmptyMask / NonPositiveValue.
MetricsReport depth_metrics(const EvalPair& pair, const MetricsOptions& opts = {});

/// depth_metrics restricted further to the class mask (nonzero = in class).
MetricsReport class_masked_metrics(const EvalPair& pair,
                                   const std::vector<std::uint8_t>& class_mask,
                                   const MetricsOptions& opts = {});

struct JointLoss {
    double total = 0.0;
    double loss_d = 0.0;
    double loss_s = 0.0;
    bool depth_mask_empty = false;
    bool structure_mask_empty = false;
};

/// Weighted sum of the two per-branch L1 sums, each over its own valid
/// mask. An empty branch contributes zero and raises its warning flag.
JointLoss joint_loss(const MapGrid& pred_d, const MapGrid& gt_d,
                     const MapGrid& pred_s, const MapGrid& gt_s,
                     const LossWeights& w);

/// Disparity-style sigmoid output to depth, D = 1/(a s + b) pinned to
/// D(0) = 100, D(1) = 0.1 (a = 9.99, b = 0.01).
double disparity_to_depth(double sigma);

/// Affine map sending the "mainly active" sigmoid range to the observed
/// structure range: logistic(-2) -> -0.5, logistic(2) -> 0.06, linear
/// extrapolation outside.
double sigmoid_to_structure(double sigma);

struct QualityItem {
    const StructureMap* structure = nullptr;
    const DepthMap* reference_depth = nullptr;
    ReferencePlane plane; // expressed in the evaluation frame
};

struct QualityFilterResult {
    std::vector<std::size_t> kept;
    std::vector<std::size_t> rejected;
    std::vector<double> rel; // structure-route depth REL per item
};

/// Keep maps whose structure-route depth REL against the reference is
/// <= threshold (default 0.5). Items with no overlapping valid pixels are
/// rejected.
QualityFilterResult quality_filter(const std::vector<QualityItem>& items,
                                   const CameraIntrinsics& K,
                                   double rel_threshold = 0.5);

} // namespace plax

#endif
