#pragma once

namespace rfield {

/// Numeric thresholds used across the library. Collected here so callers
/// can see (and override through `Tolerances` arguments) every cutoff.
struct Tolerances {
    /// Plane normals must satisfy ||n| - 1| <= unit_normal.
    double unit_normal = 1e-12;
    /// Segments shorter than this are rejected.
    double min_segment_length = 1e-12;
    /// |g1 + g2| below this is a degenerate blend.
    double degenerate_blend = 1e-14;
    /// A morph is complete once the ramp reaches 1 - morph_complete.
    double morph_complete = 1e-6;
    /// Springs whose endpoints are closer than this exert no force.
    double coincident_spring = 1e-9;
    /// Default cap on the number of grid samples.
    double grid_sample_cap = 1e7;
};

inline constexpr Tolerances default_tolerances{};

}  // namespace rfield
