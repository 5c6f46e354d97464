#ifndef PLAX_ERRORS_HPP
#define PLAX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace plax {

/// Base class for all library failures that carry a typed meaning.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Projection requested for a point at or behind the camera.
class NonPositiveDepth : public Error {
public:
    using Error::Error;
};

/// Homogeneous warp denominator vanished.
class DegenerateWarp : public Error {
public:
    using Error::Error;
};

/// Point configuration cannot determine a homography (collinear,
/// coincident, rank deficient).
class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};

/// RANSAC consensus below the minimal sample size.
class InsufficientInliers : public Error {
public:
    using Error::Error;
};

/// All residual parallax vectors below the minimum-parallax threshold.
class NoParallax : public Error {
public:
    using Error::Error;
};

/// Damped refinement could not decrease the objective within the damping cap.
class DivergedRefinement : public Error {
public:
    using Error::Error;
};

/// Every decomposition candidate puts a majority of points behind a camera.
class NoValidCandidate : public Error {
public:
    using Error::Error;
};

/// Camera motion absent or too small for the requested computation.
class NoEgoMotion : public Error {
public:
    using Error::Error;
};

/// Warped point inside the epipole exclusion radius; structure undefined.
class EpipoleSingularity : public Error {
public:
    using Error::Error;
};

/// Point pair unusable for relative structure (parallel or coincident).
class DegeneratePair : public Error {
public:
    using Error::Error;
};

/// Ray never reaches a plane-consistent depth (denominator <= 0).
class BehindPlaneHorizon : public Error {
public:
    using Error::Error;
};

/// Metric evaluation over an empty pixel mask.
class EmptyMask : public Error {
public:
    using Error::Error;
};

/// Metric evaluation saw a non-positive depth value.
class NonPositiveValue : public Error {
public:
    using Error::Error;
};

/// Synthetic scene constraints cannot be satisfied.
class InfeasibleConfig : public Error {
public:
    using Error::Error;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace plax

#endif
