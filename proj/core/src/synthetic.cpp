#include "plax/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "plax/rng.hpp"
#include "plax/structure.hpp"

namespace plax {

namespace {

Mat3 rotation_ypr(const Vec3& ypr) {
    const double cy = std::cos(ypr.x()), sy = std::sin(ypr.x());
    const double cp = std::cos(ypr.y()), sp = std::sin(ypr.y());
    const double cr = std::cos(ypr.z()), sr = std::sin(ypr.z());
    Mat3 yaw, pitch, roll;
    yaw << cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy;        // about y (vertical)
    pitch << 1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp;      // about x
    roll << cr, -sr, 0.0, sr, cr, 0.0, 0.0, 0.0, 1.0;       // about z (forward)
    return yaw * pitch * roll;
}

struct Slab {
    Vec3 lo, hi;

    // Nearest positive ray parameter, or -1 on miss. The direction is not
    // normalized; parameters are in units of the frame-a depth.
    double intersect(const Vec3& origin, const Vec3& dir) const {
        double tmin = 0.0, tmax = 1e300;
        for (int k = 0; k < 3; ++k) {
            if (std::abs(dir(k)) < 1e-15) {
                if (origin(k) < lo(k) || origin(k) > hi(k)) return -1.0;
                continue;
            }
            double t0 = (lo(k) - origin(k)) / dir(k);
            double t1 = (hi(k) - origin(k)) / dir(k);
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmin > tmax) return -1.0;
        }
        return tmin > 0.0 ? tmin : -1.0;
    }
};

Slab box_bounds(const BoxSpec& b, const ReferencePlane& ground) {
    // Boxes rest on the ground plane; with the downward normal (0,-1,0) the
    // ground sits at y = -distance and the box extends upward from it.
    const double base_y = -ground.distance;
    Slab s;
    s.lo = Vec3(b.center_x - b.size_x / 2.0, base_y, b.center_z - b.size_z / 2.0);
    s.hi = Vec3(b.center_x + b.size_x / 2.0, base_y + b.size_y, b.center_z + b.size_z / 2.0);
    return s;
}

} // namespace

SceneConfig SceneConfig::default_driving() {
    SceneConfig cfg;
    cfg.n_plane_points = 200;
    cfg.n_offplane_points = 200;
    cfg.boxes = {
        {-3.0, 12.0, 2.0, 1.6, 2.0},
        {2.5, 18.0, 2.5, 2.2, 2.5},
        {-1.0, 30.0, 3.0, 2.8, 3.0},
    };
    cfg.ego_translation = Vec3(0.0, 0.0, 1.0);
    cfg.ego_rotation_ypr = Vec3(0.01, 0.0, 0.0); // slight yaw, ~0.57 deg
    return cfg;
}

RigidPose SceneConfig::pose_a_from_b() const {
    const Mat3 r_ego = rotation_ypr(ego_rotation_ypr);
    RigidPose pose;
    pose.rotation = r_ego.transpose();
    pose.translation = -(r_ego.transpose() * ego_translation);
    return pose;
}

ReferencePlane OracleScene::plane_in_a() const {
    return transform_plane(true_pose, config.plane);
}

CorrespondenceSet perturb(const CorrespondenceSet& clean, double noise_px,
                          double outlier_fraction, std::uint64_t seed) {
    if (noise_px < 0.0) throw Error("noise sigma must be nonnegative");
    if (outlier_fraction < 0.0 || outlier_fraction >= 1.0) {
        throw Error("outlier fraction must be in [0, 1)");
    }
    CorrespondenceSet out = clean;
    Rng rng(seed);
    if (noise_px > 0.0) {
        for (auto& m : out.items) {
            m.p_a.x() += noise_px * rng.normal();
            m.p_a.y() += noise_px * rng.normal();
        }
    }
    const std::size_t n = out.items.size();
    const auto n_out = static_cast<std::size_t>(
        std::llround(outlier_fraction * static_cast<double>(n)));
    if (n_out > 0) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < n_out; ++i) { // partial Fisher-Yates
            const std::size_t j = i + rng.bounded(n - i);
            std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < n_out; ++i) {
            out.items[idx[i]].p_a.x() = rng.uniform(0.0, out.width);
            out.items[idx[i]].p_a.y() = rng.uniform(0.0, out.height);
        }
    }
    return out;
}

OracleScene generate_scene(const SceneConfig& cfg) {
    if (cfg.width <= 0 || cfg.height <= 0) throw InfeasibleConfig("empty image");
    if (cfg.n_offplane_points > 0 && cfg.boxes.empty()) {
        throw InfeasibleConfig("off-plane points requested but no boxes configured");
    }

    OracleScene scene;
    scene.config = cfg;
    scene.true_pose = cfg.pose_a_from_b();
    const RigidPose pose = scene.true_pose;
    const RigidPose pose_inv = pose.inverse();
    const CameraIntrinsics& K = cfg.intrinsics;

    scene.true_homography_raw = plane_induced_homography_raw(K, pose, cfg.plane);
    scene.true_homography = PlanarHomography(scene.true_homography_raw);
    scene.true_scaled_translation = ScaledTranslation::from(K, pose.translation);
    scene.true_epipole = scene.true_scaled_translation.epipole();
    scene.true_k_scale = scene.true_scaled_translation.t_z() / cfg.plane.distance;

    const int margin = static_cast<int>(std::ceil(cfg.margin_px));
    if (cfg.width - 2 * margin <= 0 || cfg.height - 2 * margin <= 0) {
        throw InfeasibleConfig("margins leave no pixels");
    }
    const auto in_margins = [&](const Vec2& p) {
        return p.x() >= cfg.margin_px && p.x() <= cfg.width - 1 - cfg.margin_px &&
               p.y() >= cfg.margin_px && p.y() <= cfg.height - 1 - cfg.margin_px;
    };

    Rng rng(Rng::substream(cfg.seed, 1));
    std::set<std::pair<int, int>> used_pixels;
    const auto pick_pixel = [&]() {
        const int u = margin + static_cast<int>(rng.bounded(cfg.width - 2 * margin));
        const int v = margin + static_cast<int>(rng.bounded(cfg.height - 2 * margin));
        return std::make_pair(u, v);
    };

    ReferencePlane plane_a;
    try {
        plane_a = transform_plane(pose, cfg.plane);
    } catch (const Error&) {
        throw InfeasibleConfig("reference camera is on or below the plane");
    }
    const Vec3 cam_a_in_world = pose_inv.translation;
    const StructureOptions range; // default clamp range guards the sampler

    // Heights come from the construction (0 for plane hits) rather than a
    // recomputed dot product, so on-plane structure is exactly zero.
    const auto push_point = [&](const Vec3& position_b, const Vec2& p_b, const Vec2& p_a,
                                double z_a, double z_b, double height, bool is_static) {
        PointTruth t;
        t.position_b = position_b;
        t.p_b = p_b;
        t.p_a = p_a;
        t.z_a = z_a;
        t.z_b = z_b;
        t.height = height;
        t.gamma = height / z_a;
        t.is_static = is_static;
        scene.truths.push_back(t);
        scene.correspondences.items.push_back({p_b, p_a, is_static});
    };

    // Plane points: integer frame-a pixels whose rays hit the ground.
    long attempts = 0;
    const long max_attempts = 2000L * std::max(1, cfg.n_plane_points + cfg.n_offplane_points);
    int placed = 0;
    while (placed < cfg.n_plane_points) {
        if (++attempts > max_attempts) {
            throw InfeasibleConfig("could not place the requested plane points in both frusta");
        }
        const auto px = pick_pixel();
        if (used_pixels.count(px)) continue;
        const Vec2 pixel(px.first, px.second);
        const Vec3 ray = unproject_ray(K, pixel);
        const double denom = plane_a.normal.dot(ray);
        if (denom <= 1e-9) continue; // at or above the horizon
        const double z_a = plane_a.distance / denom;
        if (z_a < cfg.min_depth || z_a > cfg.max_depth) continue;
        const Vec3 p_cam_a = z_a * ray;
        const Vec3 p_world = pose_inv.apply(p_cam_a);
        if (p_world.z() < 0.5) continue;
        Vec2 p_b;
        try {
            p_b = project(K, p_world);
        } catch (const NonPositiveDepth&) {
            continue;
        }
        if (!in_margins(p_b)) continue;
        used_pixels.insert(px);
        push_point(p_world, p_b, pixel, z_a, p_world.z(), 0.0, true);
        ++placed;
    }

    // Box points: sample a surface point, snap to the integer pixel its
    // frame-a projection rounds to, then re-cast that pixel's ray onto the
    // box so the point lies exactly on the ground-truth raster.
    placed = 0;
    while (placed < cfg.n_offplane_points) {
        if (++attempts > max_attempts) {
            throw InfeasibleConfig("could not place the requested box points in both frusta");
        }
        const auto& box = cfg.boxes[rng.bounded(cfg.boxes.size())];
        const Slab slab = box_bounds(box, cfg.plane);
        const Vec3 ext = slab.hi - slab.lo;
        // Faces weighted by area; the bottom face sits on the plane and is skipped.
        const double a_top = ext.x() * ext.z();
        const double a_xz = ext.x() * ext.y();
        const double a_yz = ext.z() * ext.y();
        const double total = a_top + 2.0 * a_xz + 2.0 * a_yz;
        double pickf = rng.uniform01() * total;
        Vec3 sample;
        if ((pickf -= a_top) < 0.0) {
            sample = Vec3(rng.uniform(slab.lo.x(), slab.hi.x()), slab.hi.y(),
                          rng.uniform(slab.lo.z(), slab.hi.z()));
        } else if ((pickf -= a_xz) < 0.0) {
            sample = Vec3(rng.uniform(slab.lo.x(), slab.hi.x()),
                          rng.uniform(slab.lo.y(), slab.hi.y()), slab.lo.z());
        } else if ((pickf -= a_xz) < 0.0) {
            sample = Vec3(rng.uniform(slab.lo.x(), slab.hi.x()),
                          rng.uniform(slab.lo.y(), slab.hi.y()), slab.hi.z());
        } else if ((pickf -= a_yz) < 0.0) {
            sample = Vec3(slab.lo.x(), rng.uniform(slab.lo.y(), slab.hi.y()),
                          rng.uniform(slab.lo.z(), slab.hi.z()));
        } else {
            sample = Vec3(slab.hi.x(), rng.uniform(slab.lo.y(), slab.hi.y()),
                          rng.uniform(slab.lo.z(), slab.hi.z()));
        }

        const Vec3 s_cam_a = pose.apply(sample);
        if (s_cam_a.z() <= 0.1) continue;
        const Vec2 proj = project(K, s_cam_a);
        const auto px = std::make_pair(static_cast<int>(std::lround(proj.x())),
                                       static_cast<int>(std::lround(proj.y())));
        if (px.first < margin || px.first > cfg.width - 1 - margin || px.second < margin ||
            px.second > cfg.height - 1 - margin || used_pixels.count(px)) {
            continue;
        }
        const Vec2 pixel(px.first, px.second);
        const Vec3 ray_a = unproject_ray(K, pixel);
        const double z_a = slab.intersect(cam_a_in_world, pose.rotation.transpose() * ray_a);
        if (z_a < cfg.min_depth || z_a > cfg.max_depth) continue;
        const Vec3 p_cam_a = z_a * ray_a;
        const Vec3 p_world = pose_inv.apply(p_cam_a);
        if (p_world.z() < 0.5) continue;
        Vec2 p_b;
        try {
            p_b = project(K, p_world);
        } catch (const NonPositiveDepth&) {
            continue;
        }
        if (!in_margins(p_b)) continue;
        const double height = plane_height(cfg.plane, p_world);
        const double gamma = height / z_a;
        if (gamma < range.clamp_lo || gamma > range.clamp_hi) continue;
        used_pixels.insert(px);
        push_point(p_world, p_b, pixel, z_a, p_world.z(), height, true);
        ++placed;
    }

    // Dynamic points: explicit positions, own displacement since frame b.
    for (const auto& dyn : cfg.dynamic_points) {
        const Vec3 at_a_cam = pose.apply(dyn.position);
        if (at_a_cam.z() <= 0.1) {
            throw InfeasibleConfig("dynamic point behind the reference camera");
        }
        const Vec2 proj = project(K, at_a_cam);
        const auto px = std::make_pair(static_cast<int>(std::lround(proj.x())),
                                       static_cast<int>(std::lround(proj.y())));
        if (px.first < 0 || px.first >= cfg.width || px.second < 0 || px.second >= cfg.height) {
            throw InfeasibleConfig("dynamic point projects outside the reference image");
        }
        const Vec2 pixel(px.first, px.second);
        const double z_a = at_a_cam.z();
        const Vec3 snapped_cam_a = z_a * unproject_ray(K, pixel);
        const Vec3 at_a_world = pose_inv.apply(snapped_cam_a);
        const Vec3 at_b_world = at_a_world - dyn.displacement;
        if (at_b_world.z() <= 0.1) {
            throw InfeasibleConfig("dynamic point behind the source camera");
        }
        const Vec2 p_b = project(K, at_b_world);
        if (!in_margins(p_b)) {
            throw InfeasibleConfig("dynamic point projects outside the source image");
        }
        push_point(at_a_world, p_b, pixel, z_a, at_b_world.z(),
                   plane_height(cfg.plane, at_a_world), false);
    }

    scene.correspondences.width = cfg.width;
    scene.correspondences.height = cfg.height;
    scene.correspondences =
        perturb(scene.correspondences, cfg.noise_px, cfg.outlier_fraction,
                Rng::substream(cfg.seed, 2));

    auto maps = ground_truth_maps(scene);
    scene.true_depth = std::move(maps.first);
    scene.true_structure = std::move(maps.second);
    return scene;
}

std::pair<DepthMap, StructureMap> ground_truth_maps(const OracleScene& scene) {
    DepthMap depth(scene.config.width, scene.config.height);
    StructureMap structure(scene.config.width, scene.config.height);
    structure.epipole = scene.true_epipole;
    structure.k_scale = scene.true_k_scale;
    for (const auto& t : scene.truths) {
        const int x = static_cast<int>(std::lround(t.p_a.x()));
        const int y = static_cast<int>(std::lround(t.p_a.y()));
        if (!depth.in_bounds(x, y)) continue;
        depth.set(x, y, t.z_a);
        structure.set(x, y, t.gamma);
    }
    return {std::move(depth), std::move(structure)};
}

SelfCheck self_check(const OracleScene& scene) {
    SelfCheck chk;
    chk.min_gamma = 1e300;
    chk.max_gamma = -1e300;
    const Mat3 a_raw = scene.true_homography_raw;
    const Vec3 a3 = a_raw.row(2).transpose();
    const double t_z = scene.true_scaled_translation.t_z();
    const double d_pi = scene.config.plane.distance;

    for (const auto& t : scene.truths) {
        if (!t.is_static) {
            ++chk.n_dynamic;
            continue;
        }
        ++chk.n_static;
        chk.min_gamma = std::min(chk.min_gamma, t.gamma);
        chk.max_gamma = std::max(chk.max_gamma, t.gamma);

        Vec2 p_w;
        if (try_warp(scene.true_homography.matrix(), t.p_b, p_w)) {
            if (std::abs(t.height) < 1e-9) {
                chk.max_on_plane_warp_error =
                    std::max(chk.max_on_plane_warp_error, (p_w - t.p_a).norm());
            }
            if (scene.true_epipole.is_finite()) {
                const Vec2 predicted =
                    p_w + t.gamma * scene.true_k_scale * (p_w - scene.true_epipole.position);
                chk.max_parallax_equation_error =
                    std::max(chk.max_parallax_equation_error, (predicted - t.p_a).norm());
            }
        }

        const Vec3 pb_h(t.p_b.x(), t.p_b.y(), 1.0);
        const double lhs = t.z_a / t.z_b;
        const double rhs = a3.dot(pb_h) - t.height * t_z / (d_pi * t.z_b);
        chk.max_depth_ratio_error = std::max(chk.max_depth_ratio_error, std::abs(lhs - rhs));
    }
    if (chk.n_static == 0) {
        chk.min_gamma = 0.0;
        chk.max_gamma = 0.0;
    }
    return chk;
}

} // namespace plax
