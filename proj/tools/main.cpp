#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "plax/errors.hpp"

namespace {

// Stable exit contract: 0 success, 1 usage/config, 2 estimation failure,
// 3 no ego-motion, 4 evaluation failure.
int run(int argc, char** argv) {
    CLI::App app{"Scene structure from planar parallax: homography estimation, "
                 "decomposition, per-pixel projective structure, depth, and evaluation"};
    app.require_subcommand(1);

    plax::cli::EstimateArgs est;
    auto* estimate = app.add_subcommand(
        "estimate", "Estimate and refine the plane-induced homography and epipole");
    estimate->add_option("--correspondences", est.correspondences, "Correspondence CSV")
        ->required();
    estimate->add_option("--intrinsics", est.intrinsics, "Intrinsics file (fx fy cx cy)")
        ->required();
    estimate->add_option("--out", est.out, "Output directory")->required();
    estimate->add_option("--seed", est.seed, "RANSAC seed");
    estimate->add_option("--ransac-threshold", est.ransac_threshold,
                         "Inlier threshold in pixels (symmetric transfer error)");
    estimate->add_option("--min-parallax", est.min_parallax, "Minimum residual parallax, pixels");
    estimate->add_flag("--alternate-epipole", est.alternate_epipole,
                       "Re-estimate the epipole between refinement rounds");

    plax::cli::StructureArgs str;
    auto* structure = app.add_subcommand(
        "structure", "Per-pixel projective structure (height over depth) map");
    structure->add_option("--correspondences", str.correspondences, "Correspondence CSV")
        ->required();
    structure->add_option("--intrinsics", str.intrinsics, "Intrinsics file")->required();
    structure->add_option("--homography", str.homography,
                          "Homography file (estimated inline when omitted)");
    structure->add_option("--epipole", str.epipole, "Epipole file");
    structure->add_option("--out", str.out, "Output directory")->required();
    structure->add_option("--width", str.width, "Output grid width (default: inferred)");
    structure->add_option("--height", str.height, "Output grid height (default: inferred)");
    structure->add_option("--seed", str.seed, "RANSAC seed");
    structure->add_option("--ransac-threshold", str.ransac_threshold, "Inlier threshold, pixels");
    structure->add_option("--min-parallax", str.min_parallax, "Minimum leverage, pixels");
    structure->add_option("--epipole-radius", str.epipole_radius,
                          "Exclusion radius around the epipole, pixels");

    plax::cli::DepthArgs dep;
    auto* depth = app.add_subcommand("depth", "Depth map via the structure or infinity route");
    depth->add_option("--mode", dep.mode, "structure-route | infinity-route")->required();
    depth->add_option("--correspondences", dep.correspondences, "Correspondence CSV")->required();
    depth->add_option("--intrinsics", dep.intrinsics, "Intrinsics file")->required();
    depth->add_option("--pose", dep.pose, "Pose file, row-major [R|t] mapping frame b to a")
        ->required();
    depth->add_option("--plane", dep.plane, "Plane file (frame b), structure-route");
    depth->add_option("--structure", dep.structure, "Precomputed structure PFM (optional)");
    depth->add_option("--homography", dep.homography, "Homography file (optional)");
    depth->add_option("--epipole", dep.epipole, "Epipole file (optional)");
    depth->add_option("--out", dep.out, "Output directory")->required();
    depth->add_option("--width", dep.width, "Output grid width (default: inferred)");
    depth->add_option("--height", dep.height, "Output grid height (default: inferred)");
    depth->add_option("--seed", dep.seed, "RANSAC seed");
    depth->add_option("--ransac-threshold", dep.ransac_threshold, "Inlier threshold, pixels");
    depth->add_option("--min-parallax", dep.min_parallax, "Minimum parallax, pixels");
    depth->add_option("--epipole-radius", dep.epipole_radius, "Exclusion radius, pixels");

    plax::cli::EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Depth metrics (REL, Sq Rel, RMSE, deltas, SILog)");
    eval->add_option("--pred", ev.pred, "Prediction PFM")->required();
    eval->add_option("--gt", ev.gt, "Ground-truth PFM")->required();
    eval->add_option("--class-mask", ev.class_masks, "Class mask PGM (repeatable)");
    eval->add_option("--pred2", ev.pred2, "Second prediction for the relative-error diff map");
    eval->add_option("--pred-structure", ev.pred_structure, "Structure prediction PFM");
    eval->add_option("--gt-structure", ev.gt_structure, "Structure ground-truth PFM");
    eval->add_option("--sd-ratio", ev.sd_ratio, "Structure/depth loss weight ratio");
    eval->add_option("--out", ev.out, "Output directory")->required();

    plax::cli::SynthArgs syn;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic oracle scene directory");
    synth->add_option("--config", syn.config, "Scene config (key=value)")->required();
    synth->add_option("--out", syn.out, "Output directory")->required();
    auto* seed_opt = synth->add_option("--seed", syn.seed, "Override the config seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error [usage]: " << e.what() << "\n";
        return 1;
    }
    syn.override_seed = seed_opt->count() > 0;

    try {
        if (estimate->parsed()) return plax::cli::cmd_estimate(est);
        if (structure->parsed()) return plax::cli::cmd_structure(str);
        if (depth->parsed()) return plax::cli::cmd_depth(dep);
        if (eval->parsed()) return plax::cli::cmd_eval(ev);
        if (synth->parsed()) return plax::cli::cmd_synth(syn);
    } catch (const plax::InsufficientInliers& e) {
        std::cerr << "error [insufficient-inliers]: " << e.what() << "\n";
        return 2;
    } catch (const plax::DegenerateConfiguration& e) {
        std::cerr << "error [degenerate-configuration]: " << e.what() << "\n";
        return 2;
    } catch (const plax::DivergedRefinement& e) {
        std::cerr << "error [diverged-refinement]: " << e.what() << "\n";
        return 2;
    } catch (const plax::NoEgoMotion& e) {
        std::cerr << "error [no-ego-motion]: " << e.what() << "\n";
        return 3;
    } catch (const plax::NoParallax& e) {
        std::cerr << "error [no-ego-motion]: " << e.what() << "\n";
        return 3;
    } catch (const plax::EmptyMask& e) {
        std::cerr << "error [empty-mask]: " << e.what() << "\n";
        return 4;
    } catch (const plax::NonPositiveValue& e) {
        std::cerr << "error [non-positive-value]: " << e.what() << "\n";
        return 4;
    } catch (const plax::InfeasibleConfig& e) {
        std::cerr << "error [infeasible-config]: " << e.what() << "\n";
        return 1;
    } catch (const plax::IoError& e) {
        std::cerr << "error [io]: " << e.what() << "\n";
        return 1;
    } catch (const plax::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
