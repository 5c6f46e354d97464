#include "plax/estimation.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "plax/rng.hpp"

namespace plax {

namespace {

struct Similarity {
    double scale = 1.0;
    Vec2 centroid = Vec2::Zero();

    Mat3 matrix() const {
        Mat3 t;
        t << scale, 0.0, -scale * centroid.x(),
             0.0, scale, -scale * centroid.y(),
             0.0, 0.0, 1.0;
        return t;
    }
};

// Hartley isotropic normalization: centroid to origin, mean radius sqrt(2).
Similarity normalizing_similarity(const std::vector<Vec2>& pts) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - c).norm();
    mean_dist /= static_cast<double>(pts.size());
    if (mean_dist < 1e-12) {
        throw DegenerateConfiguration("all points coincide, cannot normalize");
    }
    return {std::sqrt(2.0) / mean_dist, c};
}

bool three_collinear(const Vec2& a, const Vec2& b, const Vec2& c) {
    const Vec2 u = b - a;
    const Vec2 v = c - a;
    const double cross = u.x() * v.y() - u.y() * v.x();
    const double scale = u.norm() * v.norm();
    return std::abs(cross) <= 1e-9 * std::max(scale, 1e-12);
}

bool sample_degenerate(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    return three_collinear(a, b, c) || three_collinear(a, b, d) ||
           three_collinear(a, c, d) || three_collinear(b, c, d);
}

double symmetric_transfer_error_pre(const Mat3& h, const Mat3& h_inv,
                                    const Correspondence& m) {
    Vec2 fwd, bwd;
    if (!try_warp(h, m.p_b, fwd) || !try_warp(h_inv, m.p_a, bwd)) {
        throw DegenerateWarp("warp denominator vanished while scoring");
    }
    return (fwd - m.p_a).norm() + (bwd - m.p_b).norm();
}

} // namespace

void RansacParams::validate() const {
    if (!(inlier_threshold > 0.0)) throw Error("RANSAC threshold must be positive");
    if (!(confidence > 0.0 && confidence < 1.0)) throw Error("RANSAC confidence must be in (0,1)");
    if (max_iterations <= 0) throw Error("RANSAC max_iterations must be positive");
}

PlanarHomography dlt_homography(const std::vector<Correspondence>& matches) {
    std::vector<Vec2> src, dst;
    src.reserve(matches.size());
    dst.reserve(matches.size());
    for (const auto& m : matches) {
        if (!m.is_static) continue;
        src.push_back(m.p_b);
        dst.push_back(m.p_a);
    }
    const std::size_t n = src.size();
    if (n < 4) {
        throw DegenerateConfiguration("DLT needs at least 4 static matches");
    }
    if (n == 4 && sample_degenerate(src[0], src[1], src[2], src[3])) {
        throw DegenerateConfiguration("3 of 4 source points are collinear");
    }

    const Similarity tb = normalizing_similarity(src);
    const Similarity ta = normalizing_similarity(dst);

    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 pb = tb.scale * (src[i] - tb.centroid);
        const Vec2 pa = ta.scale * (dst[i] - ta.centroid);
        const double u1 = pb.x(), v1 = pb.y();
        const double u2 = pa.x(), v2 = pa.y();
        a.row(2 * i) << 0.0, 0.0, 0.0, -u1, -v1, -1.0, v2 * u1, v2 * v1, v2;
        a.row(2 * i + 1) << u1, v1, 1.0, 0.0, 0.0, 0.0, -u2 * u1, -u2 * v1, -u2;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sing = svd.singularValues();
    // With 8+ rows the system must have a 1D null space direction that is
    // clearly separated; otherwise the configuration cannot pin down H.
    if (sing(7) <= 1e-9 * sing(0)) {
        throw DegenerateConfiguration("rank-deficient DLT system");
    }
    Eigen::Matrix<double, 9, 1> hvec = svd.matrixV().col(8);
    Mat3 hn;
    hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);

    const Mat3 h = ta.matrix().inverse() * hn * tb.matrix();
    if (std::abs(h.determinant()) < 1e-12 * std::pow(h.norm(), 3)) {
        throw DegenerateConfiguration("estimated homography is rank deficient");
    }
    return PlanarHomography(h);
}

double symmetric_transfer_error(const PlanarHomography& h, const Correspondence& m) {
    const Mat3 h_inv = h.inverse().matrix();
    return symmetric_transfer_error_pre(h.matrix(), h_inv, m);
}

RansacResult ransac_homography(const CorrespondenceSet& matches, const RansacParams& params) {
    params.validate();

    std::vector<std::size_t> static_idx;
    for (std::size_t i = 0; i < matches.items.size(); ++i) {
        if (matches.items[i].is_static) static_idx.push_back(i);
    }
    if (static_idx.size() < 4) {
        throw InsufficientInliers("RANSAC needs at least 4 static matches");
    }

    const auto score_mask = [&](const PlanarHomography& h, std::vector<std::uint8_t>& mask) {
        const Mat3 hm = h.matrix();
        Mat3 hi;
        if (std::abs(hm.determinant()) < 1e-15) return static_cast<std::size_t>(0);
        hi = hm.inverse();
        std::size_t count = 0;
        mask.assign(matches.items.size(), 0);
        for (std::size_t i : static_idx) {
            Vec2 fwd, bwd;
            const auto& m = matches.items[i];
            if (!try_warp(hm, m.p_b, fwd) || !try_warp(hi, m.p_a, bwd)) continue;
            const double err = (fwd - m.p_a).norm() + (bwd - m.p_b).norm();
            if (err < params.inlier_threshold) {
                mask[i] = 1;
                ++count;
            }
        }
        return count;
    };

    std::size_t best_count = 0;
    int best_iter = -1;
    std::vector<std::uint8_t> best_mask(matches.items.size(), 0);
    PlanarHomography best_h;

    const double log_outlier = std::log(1.0 - params.confidence);
    int needed = params.max_iterations;
    int iter = 0;
    std::vector<std::uint8_t> mask;
    for (; iter < needed && iter < params.max_iterations; ++iter) {
        Rng rng(Rng::substream(params.seed, static_cast<std::uint64_t>(iter)));
        std::size_t pick[4];
        int got = 0;
        while (got < 4) {
            const std::size_t cand = static_idx[rng.bounded(static_idx.size())];
            bool dup = false;
            for (int j = 0; j < got; ++j) dup |= (pick[j] == cand);
            if (!dup) pick[got++] = cand;
        }
        std::vector<Correspondence> sample = {matches.items[pick[0]], matches.items[pick[1]],
                                              matches.items[pick[2]], matches.items[pick[3]]};
        if (sample_degenerate(sample[0].p_b, sample[1].p_b, sample[2].p_b, sample[3].p_b)) {
            continue;
        }
        PlanarHomography h;
        try {
            h = dlt_homography(sample);
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        const std::size_t count = score_mask(h, mask);
        if (count > best_count) {
            best_count = count;
            best_mask = mask;
            best_h = h;
            best_iter = iter;
            // Adaptive exit: iterations needed for the confidence bound on
            // the current inlier ratio.
            const double w = static_cast<double>(count) / static_cast<double>(static_idx.size());
            const double denom = std::log(1.0 - std::min(w * w * w * w, 1.0 - 1e-12));
            if (denom < 0.0) {
                const double est = log_outlier / denom;
                needed = (est > static_cast<double>(params.max_iterations))
                             ? params.max_iterations
                             : std::max(iter + 1, static_cast<int>(std::ceil(est)));
            }
        }
    }

    if (best_count < 4) {
        throw InsufficientInliers("best RANSAC consensus has fewer than 4 inliers");
    }

    const auto score_mask_at = [&](const PlanarHomography& h, double threshold,
                                   std::vector<std::uint8_t>& out_mask) {
        const Mat3 hm = h.matrix();
        if (std::abs(hm.determinant()) < 1e-15) return static_cast<std::size_t>(0);
        const Mat3 hi = hm.inverse();
        std::size_t count = 0;
        out_mask.assign(matches.items.size(), 0);
        for (std::size_t i : static_idx) {
            Vec2 fwd, bwd;
            const auto& m = matches.items[i];
            if (!try_warp(hm, m.p_b, fwd) || !try_warp(hi, m.p_a, bwd)) continue;
            if ((fwd - m.p_a).norm() + (bwd - m.p_b).norm() < threshold) {
                out_mask[i] = 1;
                ++count;
            }
        }
        return count;
    };

    const auto refit_rescore = [&](RansacResult& result, double threshold) {
        // Refit on the consensus and rescore until the set stabilizes; a
        // single refit keeps the minimal sample's noise bias.
        for (int round = 0; round < 10; ++round) {
            std::vector<Correspondence> inliers;
            inliers.reserve(result.n_inliers);
            for (std::size_t i = 0; i < matches.items.size(); ++i) {
                if (result.inlier_mask[i]) inliers.push_back(matches.items[i]);
            }
            PlanarHomography refit;
            try {
                refit = dlt_homography(inliers);
            } catch (const DegenerateConfiguration&) {
                break;
            }
            const std::size_t count = score_mask_at(refit, threshold, mask);
            if (count < 4) break;
            const bool stable = (mask == result.inlier_mask);
            result.homography = refit;
            result.inlier_mask = mask;
            result.n_inliers = count;
            if (stable) break;
        }
    };

    RansacResult result;
    result.homography = best_h;
    result.inlier_mask = best_mask;
    result.n_inliers = best_count;
    result.final_threshold = params.inlier_threshold;
    refit_rescore(result, params.inlier_threshold);

    // The scoring threshold is a contract, not a noise model. Estimate the
    // pixel sigma from the (truncated) consensus residuals and widen the
    // final mask to ~99% noise coverage, iterating because a tightly
    // truncated consensus under-reports its own noise.
    for (int widen_round = 0; widen_round < 4; ++widen_round) {
        const Mat3 hm = result.homography.matrix();
        const Mat3 hi = hm.inverse();
        std::vector<double> errors;
        for (std::size_t i : static_idx) {
            if (!result.inlier_mask[i]) continue;
            Vec2 fwd, bwd;
            const auto& m = matches.items[i];
            if (!try_warp(hm, m.p_b, fwd) || !try_warp(hi, m.p_a, bwd)) continue;
            errors.push_back((fwd - m.p_a).norm() + (bwd - m.p_b).norm());
        }
        if (errors.size() < 8) break;
        std::nth_element(errors.begin(), errors.begin() + errors.size() / 2, errors.end());
        const double med = errors[errors.size() / 2];
        // De-truncate: the error is ~2x a Rayleigh(sigma) cut at T, so the
        // truncated median satisfies
        //   1 - exp(-m^2/(8 s^2)) = (1 - exp(-T^2/(8 s^2))) / 2.
        const double t_thr = result.final_threshold;
        double sigma = med / 2.0;
        for (int it = 0; it < 20 && sigma > 1e-12; ++it) {
            const double f_t = 1.0 - std::exp(-t_thr * t_thr / (8.0 * sigma * sigma));
            const double predicted = sigma * std::sqrt(-8.0 * std::log(1.0 - 0.5 * f_t));
            if (predicted < 1e-12) break;
            sigma *= med / predicted;
        }
        const double widened = 6.0 * sigma;
        if (!(widened > result.final_threshold * 1.05)) break;
        std::vector<std::uint8_t> wide_mask;
        const std::size_t count = score_mask_at(result.homography, widened, wide_mask);
        if (count <= result.n_inliers) break;
        result.inlier_mask = wide_mask;
        result.n_inliers = count;
        result.final_threshold = widened;
        refit_rescore(result, widened);
    }

    result.best_iteration = best_iter;
    result.iterations_run = iter;
    return result;
}

std::vector<ResidualPair> residual_pairs(const PlanarHomography& h,
                                         const CorrespondenceSet& matches,
                                         double min_parallax) {
    std::vector<ResidualPair> out;
    const Mat3 hm = h.matrix();
    for (const auto& m : matches.items) {
        if (!m.is_static) continue;
        Vec2 pw;
        if (!try_warp(hm, m.p_b, pw)) continue;
        if ((m.p_a - pw).norm() < min_parallax) continue;
        out.push_back({pw, m.p_a});
    }
    return out;
}

Epipole estimate_epipole(const std::vector<ResidualPair>& residuals, const EpipoleOptions& opts) {
    Eigen::Matrix2d normal_eq = Eigen::Matrix2d::Zero();
    Vec2 rhs = Vec2::Zero();
    std::size_t used = 0;
    for (const auto& r : residuals) {
        const Vec2 d = r.p_a - r.p_w;
        const double len = d.norm();
        if (len < opts.min_parallax) continue;
        const Vec2 n(-d.y() / len, d.x() / len); // unit normal of the parallax line
        normal_eq += n * n.transpose();
        rhs += n * n.dot(r.p_w);
        ++used;
    }
    if (used < 2) {
        throw NoParallax("fewer than 2 residuals exceed the minimum parallax");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(normal_eq);
    const double lam_min = eig.eigenvalues()(0);
    const double lam_max = eig.eigenvalues()(1);
    if (lam_min <= opts.rank_tolerance * lam_max) {
        return Epipole::at_infinity();
    }
    const Vec2 e = normal_eq.ldlt().solve(rhs);
    return Epipole::finite(e);
}

namespace {

// Signed distance from the epipole to the line through (p_w, p_a).
// Active set and the distance carry the same sign convention so the
// least-squares residual is smooth in H.
struct LineResiduals {
    const CorrespondenceSet& matches;
    std::vector<std::size_t> active;
    Vec2 e;

    int evaluate(const Mat3& h, Eigen::VectorXd& r) const {
        for (std::size_t k = 0; k < active.size(); ++k) {
            const auto& m = matches.items[active[k]];
            Vec2 pw;
            if (!try_warp(h, m.p_b, pw)) return -1;
            const Vec2 d = m.p_a - pw;
            const double len = d.norm();
            if (len < 1e-12) return -1;
            r(static_cast<Eigen::Index>(k)) =
                (d.x() * (e.y() - pw.y()) - d.y() * (e.x() - pw.x())) / len;
        }
        return 0;
    }
};

} // namespace

double parallax_line_objective(const PlanarHomography& h, const CorrespondenceSet& matches,
                               const Epipole& epipole, double min_parallax) {
    if (!epipole.is_finite()) throw Error("objective needs a finite epipole");
    double sum = 0.0;
    const Mat3 hm = h.matrix();
    for (const auto& m : matches.items) {
        if (!m.is_static) continue;
        Vec2 pw;
        if (!try_warp(hm, m.p_b, pw)) continue;
        const Vec2 d = m.p_a - pw;
        const double len = d.norm();
        if (len < min_parallax) continue;
        const double dist = (d.x() * (epipole.position.y() - pw.y()) -
                             d.y() * (epipole.position.x() - pw.x())) / len;
        sum += dist * dist;
    }
    return sum;
}

RefineResult refine_homography_parallax(const PlanarHomography& h0,
                                        const CorrespondenceSet& matches,
                                        const Epipole& epipole,
                                        const RefineOptions& opts) {
    if (!epipole.is_finite()) {
        throw Error("refinement needs a finite epipole");
    }
    std::size_t n_static = 0;
    for (const auto& m : matches.items) n_static += m.is_static;
    if (n_static < 8) {
        throw Error("refinement needs at least 8 static matches");
    }

    // Active set fixed at H0 so the objective stays comparable across steps.
    LineResiduals res{matches, {}, epipole.position};
    {
        const Mat3 hm = h0.matrix();
        for (std::size_t i = 0; i < matches.items.size(); ++i) {
            const auto& m = matches.items[i];
            if (!m.is_static) continue;
            Vec2 pw;
            if (!try_warp(hm, m.p_b, pw)) continue;
            if ((m.p_a - pw).norm() < opts.min_parallax) continue;
            res.active.push_back(i);
        }
    }

    RefineResult out;
    out.epipole = epipole;
    if (res.active.empty()) {
        // Nothing constrains the epipolar objective; H0 is the fixed point.
        out.homography = h0;
        out.objective_log = {0.0};
        return out;
    }

    const Eigen::Index n_res = static_cast<Eigen::Index>(res.active.size());
    Eigen::VectorXd r(n_res), r_try(n_res);

    // 8 free entries in row-major order, bottom-right pinned at its
    // normalized value to fix the gauge.
    Mat3 h = h0.matrix();
    auto pack = [](const Mat3& m, Eigen::Matrix<double, 8, 1>& p) {
        p << m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1);
    };
    auto unpack = [&h0](const Eigen::Matrix<double, 8, 1>& p) {
        Mat3 m;
        m << p(0), p(1), p(2), p(3), p(4), p(5), p(6), p(7), h0.matrix()(2, 2);
        return m;
    };

    Eigen::Matrix<double, 8, 1> params;
    pack(h, params);

    // The line-to-epipole objective is blind to homologies centered on the
    // epipole (they slide points along their own epipolar lines). Anchor
    // that gauge by snapping each candidate to the orbit point nearest H0,
    // then rescaling to restore the pinned corner.
    Vec3 gauge_center(epipole.position.x(), epipole.position.y(), 1.0);
    const auto gauge_fix = [&h0, &gauge_center](Eigen::Matrix<double, 8, 1>& p, auto&& unpack_fn,
                                                auto&& pack_fn) {
        // Joint least squares over {s M + e w^T}: the 4-dim family that
        // leaves the objective unchanged. Then rescale to the pinned corner.
        const Mat3 m = unpack_fn(p);
        Eigen::Matrix<double, 9, 4> basis = Eigen::Matrix<double, 9, 4>::Zero();
        for (int c = 0; c < 3; ++c) {
            for (int r = 0; r < 3; ++r) {
                basis(3 * c + r, 0) = m(r, c);
                basis(3 * c + r, 1 + c) = gauge_center(r);
            }
        }
        Eigen::Matrix<double, 9, 1> target;
        for (int c = 0; c < 3; ++c) {
            for (int r = 0; r < 3; ++r) target(3 * c + r) = h0.matrix()(r, c);
        }
        const Eigen::Matrix<double, 4, 1> x =
            (basis.transpose() * basis).ldlt().solve(basis.transpose() * target);
        if (!x.allFinite() || std::abs(x(0)) < 1e-8) return;
        Mat3 snapped = x(0) * m;
        for (int c = 0; c < 3; ++c) snapped.col(c) += gauge_center * x(1 + c);

        const double pinned = h0.matrix()(2, 2);
        if (std::abs(snapped(2, 2)) > 0.1 * std::abs(pinned)) {
            snapped *= pinned / snapped(2, 2);
            pack_fn(snapped, p);
        }
    };

    if (res.evaluate(h, r) != 0) {
        throw DegenerateWarp("initial homography degenerate on active matches");
    }
    double objective = r.squaredNorm();
    out.objective_log.push_back(objective);

    Epipole current_e = epipole;
    const int rounds = opts.alternate_epipole ? std::max(1, opts.alternate_rounds) : 1;
    double lambda = opts.damping_init;
    int total_iters = 0;

    for (int round = 0; round < rounds; ++round) {
        for (int it = 0; it < opts.max_iterations; ++it) {
            ++total_iters;
            // Numeric Jacobian, central differences per free entry.
            Eigen::MatrixXd jac(n_res, 8);
            Eigen::VectorXd r_lo(n_res), r_hi(n_res);
            bool jac_ok = true;
            for (int c = 0; c < 8 && jac_ok; ++c) {
                const double step = 1e-7 * std::max(1e-3, std::abs(params(c)));
                Eigen::Matrix<double, 8, 1> p_hi = params, p_lo = params;
                p_hi(c) += step;
                p_lo(c) -= step;
                if (res.evaluate(unpack(p_hi), r_hi) != 0 ||
                    res.evaluate(unpack(p_lo), r_lo) != 0) {
                    jac_ok = false;
                    break;
                }
                jac.col(c) = (r_hi - r_lo) / (2.0 * step);
            }
            if (!jac_ok) {
                throw DivergedRefinement("homography became degenerate during refinement");
            }

            const Eigen::Matrix<double, 8, 8> jtj = jac.transpose() * jac;
            const Eigen::Matrix<double, 8, 1> jtr = jac.transpose() * r;

            // Marquardt scaling: the 8 entries act on pixels at wildly
            // different gains, identity damping stalls.
            Eigen::Matrix<double, 8, 1> diag = jtj.diagonal();
            const double diag_floor = 1e-12 * diag.maxCoeff();
            for (int k = 0; k < 8; ++k) diag(k) = std::max(diag(k), diag_floor);

            bool accepted = false;
            while (lambda <= opts.damping_cap) {
                Eigen::Matrix<double, 8, 8> damped = jtj;
                damped.diagonal() += lambda * diag;
                const Eigen::Matrix<double, 8, 1> delta = damped.ldlt().solve(-jtr);
                Eigen::Matrix<double, 8, 1> p_try = params + delta;
                gauge_fix(p_try, unpack, pack);
                if (res.evaluate(unpack(p_try), r_try) == 0) {
                    const double obj_try = r_try.squaredNorm();
                    if (obj_try < objective) {
                        params = p_try;
                        r = r_try;
                        objective = obj_try;
                        out.objective_log.push_back(objective);
                        lambda = std::max(lambda * 0.3, 1e-12);
                        accepted = true;
                        if (delta.norm() < opts.step_tolerance) it = opts.max_iterations;
                        break;
                    }
                }
                lambda *= 10.0;
            }
            if (!accepted) {
                break; // no downhill step at any damping: converged
            }
        }
        if (opts.alternate_epipole && round + 1 < rounds) {
            const auto pairs = residual_pairs(PlanarHomography(unpack(params)), matches,
                                              opts.min_parallax);
            Epipole e_new;
            try {
                e_new = estimate_epipole(pairs);
            } catch (const NoParallax&) {
                break;
            }
            if (!e_new.is_finite()) break;
            current_e = e_new;
            res.e = e_new.position;
            gauge_center = Vec3(e_new.position.x(), e_new.position.y(), 1.0);
            if (res.evaluate(unpack(params), r) != 0) break;
            objective = r.squaredNorm();
        }
    }

    out.homography = PlanarHomography(unpack(params));
    out.epipole = current_e;
    out.iterations = total_iters;
    return out;
}

} // namespace plax
