#ifndef PLAX_STRUCTURE_HPP
#define PLAX_STRUCTURE_HPP

#include <optional>
#include <vector>

#include "plax/correspondence.hpp"
#include "plax/estimation.hpp"
#include "plax/geometry.hpp"
#include "plax/map_grid.hpp"

namespace plax {

/// Split of the displacement p_b - p_a into the planar part u_pi and the
/// residual parallax mu. mu is computed as the remainder against the total
/// displacement so u_pi + mu reproduces p_b - p_a exactly.
struct ParallaxDecomposition {
    Vec2 u_pi = Vec2::Zero();
    Vec2 mu = Vec2::Zero();
    Vec2 p_w = Vec2::Zero();
};

ParallaxDecomposition decompose_displacement(const PlanarHomography& h,
                                             const Vec2& p_b, const Vec2& p_a);

struct StructureOptions {
    double epipole_exclusion_radius = 5.0; // pixels
    double min_parallax = 0.25;            // pixels of gamma-to-pixel leverage
    double clamp_lo = -0.5;                // observed structure range
    double clamp_hi = 0.06;
};

struct StructureSample {
    double gamma = 0.0;
    /// Residual component of (p_a - p_w) orthogonal to the parallax
    /// direction, in pixels. Zero on exact static data.
    double orthogonal_residual = 0.0;
};

/// Projective structure gamma = H/Z_a for one observation: least-squares
/// scalar along the parallax direction,
///   gamma = ((p_a - p_w) . (p_w - e)) / (k_scale |p_w - e|^2),
/// with k_scale = T_Z / D_pi. Throws EpipoleSingularity inside the
/// exclusion radius and NoEgoMotion when k_scale ~ 0.
StructureSample projective_structure_full(const Vec2& p_a, const Vec2& p_w,
                                          const Epipole& e, double k_scale,
                                          double exclusion_radius = 5.0);

double projective_structure(const Vec2& p_a, const Vec2& p_w, const Epipole& e,
                            double k_scale, double exclusion_radius = 5.0);

/// Rasterize per-match structure at round(p_a), last writer wins. Cells are
/// invalid where the match is dynamic, inside the exclusion radius, with
/// too little leverage (|k_scale| |p_w - e| below min_parallax), or outside
/// the clamp range (counted in n_out_of_range).
StructureMap structure_map(const CorrespondenceSet& matches, const PlanarHomography& h,
                           const Epipole& e, double k_scale,
                           const StructureOptions& opts = {});

/// Relative structure gamma2/gamma1 of a point pair from residuals alone
/// (no epipole): mu2 . perp(dpw) / mu1 . perp(dpw) with dpw = p_w2 - p_w1.
double relative_structure(const Vec2& mu1, const Vec2& mu2,
                          const Vec2& p_w1, const Vec2& p_w2);

struct PropagationTarget {
    Vec2 p_w = Vec2::Zero();
    Vec2 mu = Vec2::Zero();
};

/// Structure for all targets from one known anchor via relative structure;
/// degenerate pairs yield nullopt. The anchor structure must be nonzero.
std::vector<std::optional<double>> propagate_structure(const Vec2& anchor_p_w,
                                                       const Vec2& anchor_mu,
                                                       double anchor_gamma,
                                                       const std::vector<PropagationTarget>& targets);

/// Depth of the ray through p consistent with structure gamma against the
/// plane expressed in the same frame: Z = D / (n . K^-1 (u,v,1) - gamma).
/// Throws BehindPlaneHorizon when the denominator is not positive.
double structure_to_depth(double gamma, const ReferencePlane& plane,
                          const CameraIntrinsics& K, const Vec2& p);

/// gamma = (n . K^-1 (u,v,1) Z - D) / Z for Z > 0.
double depth_to_structure(double depth, const ReferencePlane& plane,
                          const CameraIntrinsics& K, const Vec2& p);

/// Pixelwise structure_to_depth over a map's valid cells; horizon and
/// out-of-range cells become invalid.
DepthMap depth_map_from_structure(const StructureMap& map, const ReferencePlane& plane,
                                  const CameraIntrinsics& K);

/// True exactly where |pixel - e| < radius, row-major w*h.
std::vector<std::uint8_t> epipole_exclusion_mask(int width, int height,
                                                 const Vec2& e, double radius);

} // namespace plax

#endif
