#include "commands.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "plax/decomposition.hpp"
#include "plax/estimation.hpp"
#include "plax/io.hpp"
#include "plax/pipeline.hpp"
#include "plax/metrics.hpp"
#include "plax/structure.hpp"
#include "plax/synthetic.hpp"

namespace plax::cli {

namespace {

using nlohmann::json;

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json matrix_json(const Mat3& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) {
        rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    }
    return rows;
}

CorrespondenceSet load_matches(const std::filesystem::path& path, const CameraIntrinsics& K,
                               int width = 0, int height = 0) {
    CorrespondenceSet set = read_correspondences_csv(path);
    if (width > 0 && height > 0) {
        set.width = width;
        set.height = height;
        return set;
    }
    // The CSV carries no dimensions; size the raster to the principal point
    // symmetric image unless the data reaches further.
    double max_u = 2.0 * K.cx, max_v = 2.0 * K.cy;
    for (const auto& m : set.items) {
        max_u = std::max({max_u, m.p_a.x() + 1.0, m.p_b.x() + 1.0});
        max_v = std::max({max_v, m.p_a.y() + 1.0, m.p_b.y() + 1.0});
    }
    set.width = static_cast<int>(std::ceil(max_u));
    set.height = static_cast<int>(std::ceil(max_v));
    return set;
}

json pipeline_json(const PipelineResult& p, const CorrespondenceSet& matches) {
    std::size_t n_static = 0;
    for (const auto& m : matches.items) n_static += m.is_static;
    json j;
    j["n_matches"] = matches.items.size();
    j["n_static"] = n_static;
    j["n_inliers"] = p.ransac.n_inliers;
    j["ransac_best_iteration"] = p.ransac.best_iteration;
    j["ransac_iterations"] = p.ransac.iterations_run;
    j["refined"] = p.refined;
    if (!p.objective_log.empty()) {
        j["objective_initial"] = p.objective_log.front();
        j["objective_final"] = p.objective_log.back();
    }
    j["noise_sigma_px"] = p.noise_sigma_px;
    j["active_parallax_px"] = p.active_parallax;
    j["epipole_source"] = p.epipole_source;
    j["epipole"] = {p.epipole.position.x(), p.epipole.position.y()};
    j["t_z_sign"] = p.epipole.t_z_sign;
    j["k_scale"] = p.k_scale;
    j["rotation"] = matrix_json(p.candidate.rotation);
    j["normal"] = {p.candidate.normal.x(), p.candidate.normal.y(), p.candidate.normal.z()};
    j["t_over_d"] = {p.candidate.scaled_translation.x(), p.candidate.scaled_translation.y(),
                     p.candidate.scaled_translation.z()};
    return j;
}

} // namespace

int cmd_estimate(const EstimateArgs& args) {
    const CameraIntrinsics K = read_intrinsics(args.intrinsics);
    const CorrespondenceSet matches = load_matches(args.correspondences, K);
    PipelineOptions popts;
    popts.seed = args.seed;
    popts.ransac_threshold = args.ransac_threshold;
    popts.min_parallax = args.min_parallax;
    popts.alternate_epipole = args.alternate_epipole;
    const PipelineResult pipe = estimate_pipeline(matches, K, popts);

    std::filesystem::create_directories(args.out);
    write_homography(args.out / "homography.txt", pipe.homography);
    write_epipole_file(args.out / "epipole.txt", {pipe.epipole, pipe.k_scale});

    {
        std::ofstream inl(args.out / "inliers.csv");
        if (!inl) throw IoError("cannot write inliers.csv");
        inl << "index,inlier\n";
        for (std::size_t i = 0; i < pipe.ransac.inlier_mask.size(); ++i) {
            inl << i << ',' << (pipe.ransac.inlier_mask[i] ? 1 : 0) << '\n';
        }
    }
    {
        std::ofstream log(args.out / "refine_log.csv");
        if (!log) throw IoError("cannot write refine_log.csv");
        log << "iteration,objective\n";
        for (std::size_t i = 0; i < pipe.objective_log.size(); ++i) {
            log << i << ',' << to_string_shortest(pipe.objective_log[i]) << '\n';
        }
    }
    write_json(args.out / "summary.json", pipeline_json(pipe, matches));
    return 0;
}

int cmd_structure(const StructureArgs& args) {
    const CameraIntrinsics K = read_intrinsics(args.intrinsics);
    const CorrespondenceSet matches =
        load_matches(args.correspondences, K, args.width, args.height);

    PlanarHomography h;
    Epipole e;
    double k_scale = 0.0;
    json estimation_summary;
    if (!args.homography.empty() && !args.epipole.empty()) {
        h = read_homography(args.homography);
        const EpipoleInfo info = read_epipole_file(args.epipole);
        if (!info.epipole.is_finite()) {
            throw NoEgoMotion("epipole file says at_infinity: no usable ego-motion");
        }
        e = info.epipole;
        if (std::isfinite(info.k_scale) && info.k_scale != 0.0) {
            k_scale = info.k_scale;
        } else {
            const auto candidates = decompose_homography(h, K);
            const auto chosen = select_solution(candidates, matches, K);
            if (chosen.pure_rotation) {
                throw NoEgoMotion("homography is a pure rotation: no ego-motion");
            }
            k_scale = (K.matrix() * chosen.scaled_translation).z();
        }
    } else {
        PipelineOptions popts;
        popts.seed = args.seed;
        popts.ransac_threshold = args.ransac_threshold;
        popts.min_parallax = args.min_parallax;
        const PipelineResult pipe = estimate_pipeline(matches, K, popts);
        h = pipe.homography;
        e = pipe.epipole;
        k_scale = pipe.k_scale;
        estimation_summary = pipeline_json(pipe, matches);
    }
    if (std::abs(k_scale) < 1e-15) {
        throw NoEgoMotion("T_Z/D is zero: structure undefined without forward motion");
    }

    StructureOptions opts;
    opts.epipole_exclusion_radius = args.epipole_radius;
    opts.min_parallax = args.min_parallax;
    opts.clamp_lo = args.clamp_lo;
    opts.clamp_hi = args.clamp_hi;
    const StructureMap map = structure_map(matches, h, e, k_scale, opts);

    std::filesystem::create_directories(args.out);
    write_pfm(args.out / "structure.pfm", map);
    write_pgm(args.out / "structure_valid.pgm", map.valid, map.width, map.height);

    double gmin = 0.0, gmax = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        if (!map.valid[i]) continue;
        if (!any) {
            gmin = gmax = map.values[i];
            any = true;
        } else {
            gmin = std::min(gmin, map.values[i]);
            gmax = std::max(gmax, map.values[i]);
        }
    }
    json j;
    j["width"] = map.width;
    j["height"] = map.height;
    j["n_valid"] = map.valid_count();
    j["valid_fraction"] =
        static_cast<double>(map.valid_count()) / (static_cast<double>(map.width) * map.height);
    j["gamma_min"] = gmin;
    j["gamma_max"] = gmax;
    j["n_out_of_range"] = map.n_out_of_range;
    j["k_scale"] = k_scale;
    j["epipole"] = {e.position.x(), e.position.y()};
    if (!estimation_summary.is_null()) j["estimation"] = estimation_summary;
    write_json(args.out / "summary.json", j);
    return 0;
}

int cmd_depth(const DepthArgs& args) {
    const CameraIntrinsics K = read_intrinsics(args.intrinsics);
    const CorrespondenceSet matches =
        load_matches(args.correspondences, K, args.width, args.height);
    std::filesystem::create_directories(args.out);

    DepthMap depth;
    json j;
    if (args.mode == "infinity-route") {
        const RigidPose pose = read_pose(args.pose);
        const ScaledTranslation T = ScaledTranslation::from(K, pose.translation);
        InfinityDepthOptions opts;
        opts.min_parallax = args.min_parallax;
        depth = plane_at_infinity_depth(matches, K, pose.rotation, T, opts);
        j["mode"] = "infinity-route";
    } else if (args.mode == "structure-route") {
        const RigidPose pose = read_pose(args.pose);
        const ReferencePlane plane_b = read_plane(args.plane);
        const ReferencePlane plane_a = transform_plane(pose, plane_b);

        StructureMap map;
        if (!args.structure.empty()) {
            // Precomputed PFM; float32 storage caps the route's precision.
            const MapGrid grid = read_pfm(args.structure);
            map = StructureMap(grid.width, grid.height);
            map.values = grid.values;
            map.valid = grid.valid;
        } else {
            PlanarHomography h;
            Epipole e;
            double k_scale = 0.0;
            if (!args.homography.empty() && !args.epipole.empty()) {
                h = read_homography(args.homography);
                const EpipoleInfo info = read_epipole_file(args.epipole);
                if (!info.epipole.is_finite()) {
                    throw NoEgoMotion("epipole file says at_infinity: no usable ego-motion");
                }
                e = info.epipole;
                k_scale = info.k_scale;
                if (!std::isfinite(k_scale) || k_scale == 0.0) {
                    const auto cands = decompose_homography(h, K);
                    const auto chosen = select_solution(cands, matches, K);
                    if (chosen.pure_rotation) {
                        throw NoEgoMotion("homography is a pure rotation: no ego-motion");
                    }
                    k_scale = (K.matrix() * chosen.scaled_translation).z();
                }
            } else {
                PipelineOptions popts;
                popts.seed = args.seed;
                popts.ransac_threshold = args.ransac_threshold;
                popts.min_parallax = args.min_parallax;
                const PipelineResult pipe = estimate_pipeline(matches, K, popts);
                h = pipe.homography;
                e = pipe.epipole;
                k_scale = pipe.k_scale;
            }
            StructureOptions opts;
            opts.epipole_exclusion_radius = args.epipole_radius;
            opts.min_parallax = args.min_parallax;
            map = structure_map(matches, h, e, k_scale, opts);
        }
        depth = depth_map_from_structure(map, plane_a, K);
        j["mode"] = "structure-route";
    } else {
        throw Error("unknown depth mode '" + args.mode +
                    "' (expected structure-route or infinity-route)");
    }

    write_pfm(args.out / "depth.pfm", depth);
    j["n_valid"] = depth.valid_count();
    write_json(args.out / "summary.json", j);
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    const MapGrid pred = read_pfm(args.pred);
    const MapGrid gt = read_pfm(args.gt);
    std::filesystem::create_directories(args.out);

    const auto report_json = [](const MetricsReport& r) {
        json j;
        j["rel"] = r.rel;
        j["sq_rel"] = r.sq_rel;
        j["rmse"] = r.rmse;
        j["rmse_log"] = r.rmse_log;
        j["silog"] = r.silog;
        j["delta1"] = r.delta1;
        j["delta2"] = r.delta2;
        j["delta3"] = r.delta3;
        j["n_evaluated"] = r.n_evaluated;
        return j;
    };

    const MetricsReport base = depth_metrics({&pred, &gt, {}});
    json j = report_json(base);

    for (const auto& mask_path : args.class_masks) {
        const MaskImage mask = read_pgm(mask_path);
        if (mask.width != pred.width || mask.height != pred.height) {
            throw Error("class mask dimensions do not match the maps");
        }
        const MetricsReport mr = class_masked_metrics({&pred, &gt, {}}, mask.data);
        const std::string stem = mask_path.stem().string();
        write_json(args.out / ("metrics_" + stem + ".json"), report_json(mr));
        j["classes"][stem] = report_json(mr);
    }

    if (!args.pred_structure.empty() && !args.gt_structure.empty()) {
        const MapGrid ps = read_pfm(args.pred_structure);
        const MapGrid gs = read_pfm(args.gt_structure);
        const LossWeights w{1.0, args.sd_ratio};
        const JointLoss loss = joint_loss(pred, gt, ps, gs, w);
        j["joint_loss"] = {{"total", loss.total},
                           {"loss_d", loss.loss_d},
                           {"loss_s", loss.loss_s},
                           {"w_d", w.w_d},
                           {"w_s", w.w_s},
                           {"sd_ratio", w.s_over_d()},
                           {"depth_mask_empty", loss.depth_mask_empty},
                           {"structure_mask_empty", loss.structure_mask_empty}};
    }

    if (!args.pred2.empty()) {
        // Relative-error difference map: positive where the second method
        // is worse, negative where it is better.
        const MapGrid pred2 = read_pfm(args.pred2);
        if (pred2.width != pred.width || pred2.height != pred.height) {
            throw Error("second prediction dimensions do not match");
        }
        MapGrid diff(pred.width, pred.height);
        for (std::size_t i = 0; i < diff.values.size(); ++i) {
            if (!pred.valid[i] || !pred2.valid[i] || !gt.valid[i]) continue;
            if (!(gt.values[i] > 0.0)) continue;
            const double r1 = std::abs(pred.values[i] - gt.values[i]) / gt.values[i];
            const double r2 = std::abs(pred2.values[i] - gt.values[i]) / gt.values[i];
            diff.set(static_cast<int>(i % diff.width), static_cast<int>(i / diff.width),
                     r2 - r1);
        }
        write_pfm(args.out / "rel_error_diff.pfm", diff);
    }

    write_json(args.out / "metrics.json", j);
    return 0;
}

int cmd_synth(const SynthArgs& args) {
    SceneConfig cfg = read_scene_config(args.config);
    if (args.override_seed) cfg.seed = args.seed;
    const OracleScene scene = generate_scene(cfg);
    write_scene_dir(scene, args.out);
    return 0;
}

} // namespace plax::cli
