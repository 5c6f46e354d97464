#include "plax/structure.hpp"

#include <cmath>
#include <stdexcept>

namespace plax {

ParallaxDecomposition decompose_displacement(const PlanarHomography& h,
                                             const Vec2& p_b, const Vec2& p_a) {
    ParallaxDecomposition out;
    out.p_w = warp(h, p_b);
    out.u_pi = p_b - out.p_w;
    out.mu = (p_b - p_a) - out.u_pi;
    return out;
}

StructureSample projective_structure_full(const Vec2& p_a, const Vec2& p_w,
                                          const Epipole& e, double k_scale,
                                          double exclusion_radius) {
    if (!e.is_finite()) {
        throw NoEgoMotion("projective structure needs a finite epipole");
    }
    if (std::abs(k_scale) < 1e-15) {
        throw NoEgoMotion("k_scale (T_Z/D) is zero, structure undefined");
    }
    const Vec2 lever = p_w - e.position;
    const double lever2 = lever.squaredNorm();
    if (lever2 < exclusion_radius * exclusion_radius) {
        throw EpipoleSingularity("warped point inside the epipole exclusion radius");
    }
    const Vec2 disp = p_a - p_w;
    StructureSample s;
    s.gamma = disp.dot(lever) / (k_scale * lever2);
    s.orthogonal_residual =
        std::abs(disp.x() * lever.y() - disp.y() * lever.x()) / std::sqrt(lever2);
    return s;
}

double projective_structure(const Vec2& p_a, const Vec2& p_w, const Epipole& e,
                            double k_scale, double exclusion_radius) {
    return projective_structure_full(p_a, p_w, e, k_scale, exclusion_radius).gamma;
}

StructureMap structure_map(const CorrespondenceSet& matches, const PlanarHomography& h,
                           const Epipole& e, double k_scale, const StructureOptions& opts) {
    if (!e.is_finite()) {
        throw NoEgoMotion("structure map needs a finite epipole");
    }
    if (std::abs(k_scale) < 1e-15) {
        throw NoEgoMotion("structure map needs a nonzero k_scale");
    }
    StructureMap map(matches.width, matches.height);
    map.epipole = e;
    map.k_scale = k_scale;

    const Mat3 hm = h.matrix();
    for (const auto& m : matches.items) {
        const int x = static_cast<int>(std::lround(m.p_a.x()));
        const int y = static_cast<int>(std::lround(m.p_a.y()));
        if (!map.in_bounds(x, y)) continue;
        if (!m.is_static) {
            map.set_invalid(x, y);
            continue;
        }
        Vec2 pw;
        if (!try_warp(hm, m.p_b, pw)) {
            map.set_invalid(x, y);
            continue;
        }
        const Vec2 lever = pw - e.position;
        const double lever_len = lever.norm();
        if (lever_len < opts.epipole_exclusion_radius) {
            map.set_invalid(x, y);
            continue;
        }
        // Leverage check: the pixel displacement a unit of gamma produces.
        // Below the minimum parallax the cell has no signal, which is
        // different from being on the plane.
        if (std::abs(k_scale) * lever_len < opts.min_parallax) {
            map.set_invalid(x, y);
            continue;
        }
        const double gamma = (m.p_a - pw).dot(lever) / (k_scale * lever_len * lever_len);
        if (!std::isfinite(gamma)) {
            map.set_invalid(x, y);
            continue;
        }
        if (gamma < opts.clamp_lo || gamma > opts.clamp_hi) {
            map.set_invalid(x, y, gamma);
            ++map.n_out_of_range;
            continue;
        }
        map.set(x, y, gamma);
    }
    return map;
}

double relative_structure(const Vec2& mu1, const Vec2& mu2,
                          const Vec2& p_w1, const Vec2& p_w2) {
    const Vec2 dpw = p_w2 - p_w1;
    if (dpw.norm() < 1e-9) {
        throw DegeneratePair("warped points coincide");
    }
    const Vec2 perp(-dpw.y(), dpw.x());
    const double denom = mu1.dot(perp);
    if (std::abs(denom) < 1e-12) {
        throw DegeneratePair("anchor parallax is parallel to the pair baseline");
    }
    return mu2.dot(perp) / denom;
}

std::vector<std::optional<double>> propagate_structure(
    const Vec2& anchor_p_w, const Vec2& anchor_mu, double anchor_gamma,
    const std::vector<PropagationTarget>& targets) {
    if (anchor_gamma == 0.0) {
        throw std::invalid_argument("anchor structure must be nonzero");
    }
    std::vector<std::optional<double>> out;
    out.reserve(targets.size());
    for (const auto& t : targets) {
        try {
            out.push_back(anchor_gamma * relative_structure(anchor_mu, t.mu, anchor_p_w, t.p_w));
        } catch (const DegeneratePair&) {
            out.push_back(std::nullopt);
        }
    }
    return out;
}

double structure_to_depth(double gamma, const ReferencePlane& plane,
                          const CameraIntrinsics& K, const Vec2& p) {
    const Vec3 ray = unproject_ray(K, p);
    const double denom = plane.normal.dot(ray) - gamma;
    if (!(denom > 0.0)) {
        throw BehindPlaneHorizon("ray parallel to or diverging from the plane-consistent depth");
    }
    return plane.distance / denom;
}

double depth_to_structure(double depth, const ReferencePlane& plane,
                          const CameraIntrinsics& K, const Vec2& p) {
    if (!(depth > 0.0)) {
        throw NonPositiveDepth("depth must be positive");
    }
    const Vec3 ray = unproject_ray(K, p);
    return (plane.normal.dot(ray) * depth - plane.distance) / depth;
}

DepthMap depth_map_from_structure(const StructureMap& map, const ReferencePlane& plane,
                                  const CameraIntrinsics& K) {
    DepthMap depth(map.width, map.height);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            if (!map.is_valid(x, y)) continue;
            double z;
            try {
                z = structure_to_depth(map.at(x, y), plane, K, Vec2(x, y));
            } catch (const BehindPlaneHorizon&) {
                continue;
            }
            if (z < DepthMap::kMinDepth || z > DepthMap::kMaxDepth) continue;
            depth.set(x, y, z);
        }
    }
    return depth;
}

std::vector<std::uint8_t> epipole_exclusion_mask(int width, int height,
                                                 const Vec2& e, double radius) {
    if (radius < 0.0) throw Error("exclusion radius must be nonnegative");
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 0);
    const double r2 = radius * radius;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = x - e.x();
            const double dy = y - e.y();
            if (dx * dx + dy * dy < r2) {
                mask[static_cast<std::size_t>(y) * width + x] = 1;
            }
        }
    }
    return mask;
}

} // namespace plax
