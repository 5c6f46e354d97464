#include "plax/decomposition.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace plax {

Epipole ScaledTranslation::epipole() const {
    const double norm = t.norm();
    if (norm < 1e-15) return Epipole::at_infinity();
    if (std::abs(t.z()) < 1e-12 * norm) return Epipole::at_infinity();
    return Epipole::finite(Vec2(t.x() / t.z(), t.y() / t.z()), t.z() > 0.0 ? 1 : -1);
}

PlanarHomography recompose(const DecompositionCandidate& c, const CameraIntrinsics& K) {
    const Mat3 core = c.rotation + c.scaled_translation * c.normal.transpose();
    return PlanarHomography(Mat3(K.matrix() * core * K.inverse_matrix()));
}

namespace {

Mat3 project_to_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Mat3 flip = Mat3::Identity();
        flip(2, 2) = -1.0;
        r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return r;
}

double frobenius_gap(const PlanarHomography& a, const PlanarHomography& b) {
    return std::min((a.matrix() - b.matrix()).norm(), (a.matrix() + b.matrix()).norm());
}

} // namespace

std::vector<DecompositionCandidate> decompose_homography(const PlanarHomography& h,
                                                         const CameraIntrinsics& K,
                                                         const DecomposeOptions& opts) {
    const Mat3 m = K.inverse_matrix() * h.matrix() * K.matrix();
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double d1 = svd.singularValues()(0);
    const double d2 = svd.singularValues()(1);
    const double d3 = svd.singularValues()(2);
    if (!(d3 > 0.0)) {
        throw DegenerateConfiguration("homography is singular, cannot decompose");
    }

    // Pure rotation: all singular values equal after scale removal.
    const Mat3 gram = (m.transpose() * m) / (d2 * d2);
    if ((gram - Mat3::Identity()).norm() < opts.pure_rotation_tolerance) {
        DecompositionCandidate c;
        const Mat3 scaled = m / d2;
        c.rotation = project_to_rotation(scaled.determinant() < 0.0 ? Mat3(-scaled) : scaled);
        c.pure_rotation = true;
        return {c};
    }

    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    const double s = u.determinant() * v.determinant();

    const double x1 = std::sqrt(std::max(0.0, (d1 * d1 - d2 * d2) / (d1 * d1 - d3 * d3)));
    const double x3 = std::sqrt(std::max(0.0, (d2 * d2 - d3 * d3) / (d1 * d1 - d3 * d3)));
    const double e1[4] = {1.0, 1.0, -1.0, -1.0};
    const double e3[4] = {1.0, -1.0, 1.0, -1.0};

    std::vector<DecompositionCandidate> raw;
    raw.reserve(8);

    // Case d' = +d2: diag(d1,d2,d3) = d2 R' + t' n'^T with R' a rotation
    // about the middle axis. Mapping back through U, V^T and the sign
    // s gives  (s/d2) M = R + (s U t'/d2) (V n')^T.
    {
        const double cos_t = (d2 * d2 + d1 * d3) / ((d1 + d3) * d2);
        const double st_mag = std::sqrt(std::max(0.0, (d1 * d1 - d2 * d2) * (d2 * d2 - d3 * d3))) /
                              ((d1 + d3) * d2);
        for (int i = 0; i < 4; ++i) {
            Mat3 rp = Mat3::Zero();
            const double st = e1[i] * e3[i] * st_mag;
            rp(0, 0) = cos_t;
            rp(0, 2) = -st;
            rp(1, 1) = 1.0;
            rp(2, 0) = st;
            rp(2, 2) = cos_t;

            const Vec3 np(e1[i] * x1, 0.0, e3[i] * x3);
            Vec3 tp(e1[i] * x1, 0.0, -e3[i] * x3);
            tp *= (d1 - d3) / d2;

            DecompositionCandidate c;
            c.rotation = s * u * rp * v.transpose();
            c.scaled_translation = s * (u * tp);
            c.normal = v * np;
            raw.push_back(c);
        }
    }
    // Case d' = -d2: diag = -d2 R'' + t'' n''^T, so
    // (-s/d2) M = R + (-s U t''/d2) (V n'')^T covers the opposite sign of M.
    {
        const double cos_p = (d1 * d3 - d2 * d2) / ((d1 - d3) * d2);
        const double sp_mag = std::sqrt(std::max(0.0, (d1 * d1 - d2 * d2) * (d2 * d2 - d3 * d3))) /
                              ((d1 - d3) * d2);
        for (int i = 0; i < 4; ++i) {
            Mat3 rp = Mat3::Zero();
            const double sp = e1[i] * e3[i] * sp_mag;
            rp(0, 0) = cos_p;
            rp(0, 2) = sp;
            rp(1, 1) = -1.0;
            rp(2, 0) = sp;
            rp(2, 2) = -cos_p;

            const Vec3 np(e1[i] * x1, 0.0, e3[i] * x3);
            Vec3 tp(e1[i] * x1, 0.0, e3[i] * x3);
            tp *= (d1 + d3) / d2;

            DecompositionCandidate c;
            c.rotation = s * u * rp * v.transpose();
            c.scaled_translation = -s * (u * tp);
            c.normal = v * np;
            raw.push_back(c);
        }
    }

    // Keep candidates that reproduce the input up to a positive scale; the
    // two Faugeras branches cover both signs of the calibrated matrix, so
    // exactly the physical 4 survive.
    std::vector<DecompositionCandidate> out;
    for (auto& c : raw) {
        c.rotation = project_to_rotation(c.rotation); // shave SVD roundoff
        const double nn = c.normal.norm();
        if (nn < 1e-12) continue;
        c.normal /= nn;
        c.scaled_translation *= nn;

        const Mat3 w = c.rotation + c.scaled_translation * c.normal.transpose();
        const double alpha = (m.array() * w.array()).sum() / m.squaredNorm();
        if (!(alpha > 0.0)) continue;
        if (frobenius_gap(recompose(c, K), h) > opts.recomposition_tolerance) continue;

        bool duplicate = false;
        for (const auto& kept : out) {
            if ((kept.rotation - c.rotation).norm() < 1e-9 &&
                (kept.normal - c.normal).norm() < 1e-9 &&
                (kept.scaled_translation - c.scaled_translation).norm() < 1e-9) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) out.push_back(c);
    }
    if (out.empty()) {
        throw DegenerateConfiguration("no decomposition candidate reproduces the homography");
    }
    if (out.size() > 4) out.resize(4);
    return out;
}

std::optional<std::pair<double, double>> triangulate_depths(const CameraIntrinsics& K,
                                                            const Mat3& rotation,
                                                            const Vec3& translation,
                                                            const Correspondence& m) {
    const Vec3 xb = unproject_ray(K, m.p_b);
    const Vec3 xa = unproject_ray(K, m.p_a);
    Eigen::Matrix<double, 3, 2> a;
    a.col(0) = rotation * xb;
    a.col(1) = -xa;
    const Eigen::Matrix2d ata = a.transpose() * a;
    if (std::abs(ata.determinant()) < 1e-15) return std::nullopt;
    const Eigen::Vector2d z = ata.ldlt().solve(a.transpose() * (-translation));
    if (!std::isfinite(z(0)) || !std::isfinite(z(1))) return std::nullopt;
    return std::make_pair(z(0), z(1));
}

DecompositionCandidate select_solution(const std::vector<DecompositionCandidate>& candidates,
                                       const CorrespondenceSet& matches,
                                       const CameraIntrinsics& K,
                                       const Vec3& normal_prior) {
    if (candidates.empty()) {
        throw NoValidCandidate("no decomposition candidates to select from");
    }
    if (candidates.size() == 1) return candidates.front();

    std::size_t n_usable = 0;
    for (const auto& m : matches.items) n_usable += m.is_static;

    std::vector<std::size_t> votes(candidates.size(), 0);
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        const auto& c = candidates[ci];
        for (const auto& m : matches.items) {
            if (!m.is_static) continue;
            const auto z = triangulate_depths(K, c.rotation, c.scaled_translation, m);
            if (z && z->first > 1e-9 && z->second > 1e-9) ++votes[ci];
        }
    }
    std::size_t best_votes = 0;
    for (auto v : votes) best_votes = std::max(best_votes, v);
    if (best_votes * 2 < n_usable) {
        throw NoValidCandidate("every candidate places a majority of points behind a camera");
    }
    // Mirror solutions can trail the winner by a handful of noisy votes;
    // anything within the margin is a tie for the prior to break.
    const std::size_t margin = 2 + best_votes / 20;
    const DecompositionCandidate* best = nullptr;
    double best_prior = -2.0;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        if (votes[ci] + margin < best_votes) continue;
        const double prior = candidates[ci].normal.dot(normal_prior);
        if (best == nullptr || prior > best_prior) {
            best = &candidates[ci];
            best_prior = prior;
        }
    }
    return *best;
}

std::optional<std::pair<double, double>> infinity_depth(const CameraIntrinsics& K,
                                                        const Mat3& rotation,
                                                        const ScaledTranslation& T,
                                                        const Correspondence& m,
                                                        const InfinityDepthOptions& opts) {
    const Mat3 h_inf = K.matrix() * rotation * K.inverse_matrix();
    const Vec3 q = h_inf * Vec3(m.p_b.x(), m.p_b.y(), 1.0);
    if (std::abs(q.z()) < 1e-12) return std::nullopt;
    const Vec2 p_inf(q.x() / q.z(), q.y() / q.z());
    const Vec2 parallax = m.p_a - p_inf;
    const double len2 = parallax.squaredNorm();
    if (len2 < opts.min_parallax * opts.min_parallax) return std::nullopt;

    const Vec2 rhs(T.t.x() - T.t.z() * m.p_a.x(), T.t.y() - T.t.z() * m.p_a.y());
    const double z_b = parallax.dot(rhs) / (q.z() * len2);
    const double z_a = q.z() * z_b + T.t.z();
    if (!std::isfinite(z_b) || !std::isfinite(z_a)) return std::nullopt;
    return std::make_pair(z_b, z_a);
}

DepthMap plane_at_infinity_depth(const CorrespondenceSet& matches,
                                 const CameraIntrinsics& K,
                                 const Mat3& rotation,
                                 const ScaledTranslation& T,
                                 const InfinityDepthOptions& opts) {
    if (T.t.norm() < 1e-12) {
        throw NoEgoMotion("translation magnitude is ~0, infinity-route depth undefined");
    }
    DepthMap map(matches.width, matches.height);
    for (const auto& m : matches.items) {
        if (!m.is_static) continue;
        const int x = static_cast<int>(std::lround(m.p_a.x()));
        const int y = static_cast<int>(std::lround(m.p_a.y()));
        if (!map.in_bounds(x, y)) continue;
        const auto z = infinity_depth(K, rotation, T, m, opts);
        if (!z || !(z->second >= DepthMap::kMinDepth) || !(z->second <= DepthMap::kMaxDepth) ||
            !(z->first > 0.0)) {
            map.set_invalid(x, y);
            continue;
        }
        map.set(x, y, z->second);
    }
    return map;
}

} // namespace plax
