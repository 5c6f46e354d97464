#ifndef PLAX_TOOLS_COMMANDS_HPP
#define PLAX_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace plax::cli {

struct EstimateArgs {
    std::filesystem::path correspondences;
    std::filesystem::path intrinsics;
    std::filesystem::path out;
    std::uint64_t seed = 0;
    double ransac_threshold = 1.0;
    double min_parallax = 0.25;
    bool alternate_epipole = false;
};

struct StructureArgs {
    int width = 0;  // 0 = infer from the data extents
    int height = 0;
    std::filesystem::path correspondences;
    std::filesystem::path intrinsics;
    std::filesystem::path homography; // optional: estimated inline when empty
    std::filesystem::path epipole;    // optional
    std::filesystem::path out;
    std::uint64_t seed = 0;
    double ransac_threshold = 1.0;
    double min_parallax = 0.25;
    double epipole_radius = 5.0;
    double clamp_lo = -0.5;
    double clamp_hi = 0.06;
};

struct DepthArgs {
    std::string mode; // "structure-route" | "infinity-route"
    int width = 0;
    int height = 0;
    std::filesystem::path correspondences;
    std::filesystem::path intrinsics;
    std::filesystem::path pose;
    std::filesystem::path plane;      // structure-route only (frame b)
    std::filesystem::path structure;  // optional precomputed PFM
    std::filesystem::path homography; // optional
    std::filesystem::path epipole;    // optional
    std::filesystem::path out;
    std::uint64_t seed = 0;
    double ransac_threshold = 1.0;
    double min_parallax = 0.25;
    double epipole_radius = 5.0;
};

struct EvalArgs {
    std::filesystem::path pred;
    std::filesystem::path gt;
    std::vector<std::filesystem::path> class_masks;
    std::filesystem::path pred2;          // optional second method for the diff map
    std::filesystem::path pred_structure; // optional joint-loss inputs
    std::filesystem::path gt_structure;
    double sd_ratio = 10.0;
    std::filesystem::path out;
};

struct SynthArgs {
    std::filesystem::path config;
    std::filesystem::path out;
    bool override_seed = false;
    std::uint64_t seed = 0;
};

int cmd_estimate(const EstimateArgs& args);
int cmd_structure(const StructureArgs& args);
int cmd_depth(const DepthArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_synth(const SynthArgs& args);

} // namespace plax::cli

#endif
