#include "plax/metrics.hpp"

#include <cmath>
#include <limits>

#include "plax/structure.hpp"

namespace plax {

namespace {

// Kahan compensated accumulator; reductions run in a fixed order so
// repeated evaluations are bit-identical.
struct Kahan {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

} // namespace

MetricsReport depth_metrics(const EvalPair& pair, const MetricsOptions& opts) {
    if (pair.predicted == nullptr || pair.ground_truth == nullptr) {
        throw Error("evaluation pair is missing a map");
    }
    const MapGrid& d = *pair.predicted;
    const MapGrid& g = *pair.ground_truth;
    if (d.width != g.width || d.height != g.height) {
        throw Error("evaluation maps have different dimensions");
    }
    const std::size_t n_cells = d.values.size();
    if (!pair.mask.empty() && pair.mask.size() != n_cells) {
        throw Error("evaluation mask has wrong size");
    }

    Kahan abs_rel, sq_rel, sq_err, sq_log, log_err, log_err_sq;
    std::size_t n = 0, n_d1 = 0, n_d2 = 0, n_d3 = 0;
    for (std::size_t i = 0; i < n_cells; ++i) {
        if (!d.valid[i] || !g.valid[i]) continue;
        if (!pair.mask.empty() && !pair.mask[i]) continue;
        const double gv = g.values[i];
        if (gv < opts.gt_min || gv > opts.gt_max) continue;
        const double dv = d.values[i];
        if (!(dv > 0.0) || !(gv > 0.0)) {
            throw NonPositiveValue("masked depth values must be positive");
        }
        const double diff = dv - gv;
        abs_rel.add(std::abs(diff) / gv);
        sq_rel.add(diff * diff / gv);
        sq_err.add(diff * diff);
        const double le = std::log(dv) - std::log(gv);
        sq_log.add(le * le);
        log_err.add(le);
        log_err_sq.add(le * le);
        const double ratio = dv > gv ? dv / gv : gv / dv;
        n_d1 += ratio < 1.25;
        n_d2 += ratio < 1.25 * 1.25;
        n_d3 += ratio < 1.25 * 1.25 * 1.25;
        ++n;
    }
    if (n == 0) {
        throw EmptyMask("no pixels left to evaluate");
    }

    const double nd = static_cast<double>(n);
    MetricsReport r;
    r.rel = abs_rel.sum / nd;
    r.sq_rel = sq_rel.sum / nd;
    r.rmse = std::sqrt(sq_err.sum / nd);
    r.rmse_log = std::sqrt(sq_log.sum / nd);
    const double mean_e = log_err.sum / nd;
    const double var = std::max(0.0, log_err_sq.sum / nd - mean_e * mean_e);
    r.silog = 100.0 * std::sqrt(var);
    r.delta1 = static_cast<double>(n_d1) / nd;
    r.delta2 = static_cast<double>(n_d2) / nd;
    r.delta3 = static_cast<double>(n_d3) / nd;
    r.n_evaluated = n;
    return r;
}

MetricsReport class_masked_metrics(const EvalPair& pair,
                                   const std::vector<std::uint8_t>& class_mask,
                                   const MetricsOptions& opts) {
    EvalPair restricted = pair;
    if (restricted.mask.empty()) {
        restricted.mask = class_mask;
    } else {
        if (restricted.mask.size() != class_mask.size()) {
            throw Error("class mask size mismatch");
        }
        for (std::size_t i = 0; i < class_mask.size(); ++i) {
            restricted.mask[i] = restricted.mask[i] && class_mask[i];
        }
    }
    return depth_metrics(restricted, opts);
}

JointLoss joint_loss(const MapGrid& pred_d, const MapGrid& gt_d,
                     const MapGrid& pred_s, const MapGrid& gt_s,
                     const LossWeights& w) {
    if (pred_d.width != gt_d.width || pred_d.height != gt_d.height ||
        pred_s.width != gt_s.width || pred_s.height != gt_s.height) {
        throw Error("joint loss maps have different dimensions");
    }
    if (w.w_d < 0.0 || w.w_s < 0.0 || !(w.w_d + w.w_s > 0.0)) {
        throw Error("loss weights must be nonnegative and not both zero");
    }
    JointLoss out;
    Kahan d_sum, s_sum;
    std::size_t nd = 0, ns = 0;
    for (std::size_t i = 0; i < pred_d.values.size(); ++i) {
        if (!pred_d.valid[i] || !gt_d.valid[i]) continue;
        d_sum.add(std::abs(pred_d.values[i] - gt_d.values[i]));
        ++nd;
    }
    for (std::size_t i = 0; i < pred_s.values.size(); ++i) {
        if (!pred_s.valid[i] || !gt_s.valid[i]) continue;
        s_sum.add(std::abs(pred_s.values[i] - gt_s.values[i]));
        ++ns;
    }
    out.loss_d = d_sum.sum;
    out.loss_s = s_sum.sum;
    out.depth_mask_empty = (nd == 0);
    out.structure_mask_empty = (ns == 0);
    out.total = w.w_d * out.loss_d + w.w_s * out.loss_s;
    return out;
}

double disparity_to_depth(double sigma) {
    // Endpoints force b = 1/100 and a + b = 1/0.1.
    constexpr double a = 9.99;
    constexpr double b = 0.01;
    return 1.0 / (a * sigma + b);
}

double sigmoid_to_structure(double sigma) {
    // logistic(-2) and logistic(2); the anchors map to the observed
    // structure extremes. Lerp form keeps both anchors exact.
    constexpr double lo = 0.11920292202211755;
    constexpr double hi = 1.0 - lo;
    constexpr double gamma_lo = -0.5;
    constexpr double gamma_hi = 0.06;
    const double t = (sigma - lo) / (hi - lo);
    return gamma_lo * (1.0 - t) + gamma_hi * t;
}

QualityFilterResult quality_filter(const std::vector<QualityItem>& items,
                                   const CameraIntrinsics& K, double rel_threshold) {
    QualityFilterResult out;
    out.rel.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& item = items[i];
        if (item.structure == nullptr || item.reference_depth == nullptr) {
            throw Error("quality filter item is missing a map");
        }
        const DepthMap routed = depth_map_from_structure(*item.structure, item.plane, K);
        double rel = std::numeric_limits<double>::infinity();
        try {
            EvalPair pair;
            pair.predicted = &routed;
            pair.ground_truth = item.reference_depth;
            rel = depth_metrics(pair).rel;
        } catch (const EmptyMask&) {
            // nothing comparable: treated as unusable below
        }
        out.rel.push_back(rel);
        if (rel <= rel_threshold) {
            out.kept.push_back(i);
        } else {
            out.rejected.push_back(i);
        }
    }
    return out;
}

} // namespace plax
