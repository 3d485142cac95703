#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "rfield/dual.hpp"
#include "rfield/errors.hpp"
#include "rfield/rfunctions.hpp"
#include "rfield/tolerances.hpp"
#include "rfield/vec.hpp"

namespace rfield {

/// Coordinates of an evaluation point, as plain doubles or seeded duals.
template <class T>
struct Coords {
    std::array<T, Vec::max_dim> x{};
    std::size_t dim = 0;

    const T& operator[](std::size_t i) const { return x[i]; }
};

inline Coords<double> coords_of(const Point& p) {
    Coords<double> c;
    c.dim = p.dim();
    for (std::size_t i = 0; i < p.dim(); ++i) c.x[i] = p[i];
    return c;
}

inline Coords<Dual> seeded_coords_of(const Point& p) {
    Coords<Dual> c;
    c.dim = p.dim();
    for (std::size_t i = 0; i < p.dim(); ++i) c.x[i] = Dual::variable(p[i], i, p.dim());
    return c;
}

namespace detail {

template <class T>
T distance_sq(const Coords<T>& x, const Point& c) {
    T d2 = lift(0.0, x[0]);
    for (std::size_t i = 0; i < x.dim; ++i) {
        const T d = x[i] - c[i];
        d2 = d2 + d * d;
    }
    return d2;
}

inline void require_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw DimensionError(std::string(what) + " expects a " + std::to_string(want) +
                             "-D point, got " + std::to_string(got) + "-D");
    }
}

}  // namespace detail

// Field kernels. Inside-positive, zero on the boundary.

/// (R^2 - |x - c|^2) / (2R)
template <class T>
T circle_field(const Coords<T>& x, const Point& center, double radius) {
    return (radius * radius - detail::distance_sq(x, center)) / (2.0 * radius);
}

/// Line segment p1-p2: linear carrier f trimmed by the disk on the segment's
/// diameter. Non-negative, zero on the closed segment.
template <class T>
T segment_field(const Coords<T>& x, const Point& p1, const Point& p2) {
    const double dx = p2[0] - p1[0];
    const double dy = p2[1] - p1[1];
    const double len = std::sqrt(dx * dx + dy * dy);
    const Point mid{(p1[0] + p2[0]) / 2.0, (p1[1] + p2[1]) / 2.0};
    const T f = ((x[0] - p1[0]) * dy - (x[1] - p1[1]) * dx) / len;
    const T t = ((len / 2.0) * (len / 2.0) - detail::distance_sq(x, mid)) / len;
    return trim(f, t);
}

/// normalized: (R^2 - |x - c|^2) / (2R), inside-positive.
/// raw: |x - c|^2 - R^2, outside-positive.
template <class T>
T sphere_field(const Coords<T>& x, const Point& center, double radius, bool normalized) {
    if (normalized) return circle_field(x, center, radius);
    return detail::distance_sq(x, center) - radius * radius;
}

/// (x - o) . n
template <class T>
T plane_field(const Coords<T>& x, const Point& origin, const Vec& normal) {
    T s = lift(0.0, x[0]);
    for (std::size_t i = 0; i < x.dim; ++i) s = s + (x[i] - origin[i]) * normal[i];
    return s;
}

// Checked scalar entry points.

inline double eval_circle(const Point& x, const Point& center, double radius) {
    detail::require_dim(x.dim(), 2, "circle");
    detail::require_dim(center.dim(), 2, "circle");
    if (!(radius > 0.0)) throw DegenerateError("circle radius must be positive");
    return circle_field(coords_of(x), center, radius);
}

inline double eval_segment(const Point& x, const Point& p1, const Point& p2,
                           const Tolerances& tol = default_tolerances) {
    detail::require_dim(x.dim(), 2, "segment");
    detail::require_dim(p1.dim(), 2, "segment");
    detail::require_dim(p2.dim(), 2, "segment");
    if (norm(p2 - p1) < tol.min_segment_length) throw DegenerateError("degenerate segment");
    return segment_field(coords_of(x), p1, p2);
}

inline double eval_sphere(const Point& x, const Point& center, double radius, bool normalized = true) {
    detail::require_dim(x.dim(), 3, "sphere");
    detail::require_dim(center.dim(), 3, "sphere");
    if (!(radius > 0.0)) throw DegenerateError("sphere radius must be positive");
    return sphere_field(coords_of(x), center, radius, normalized);
}

inline double eval_plane(const Point& x, const Point& origin, const Vec& normal,
                         const Tolerances& tol = default_tolerances) {
    detail::require_dim(origin.dim(), x.dim(), "plane");
    detail::require_dim(normal.dim(), x.dim(), "plane");
    if (std::fabs(norm(normal) - 1.0) > tol.unit_normal) throw DegenerateError("plane normal must be unit length");
    return plane_field(coords_of(x), origin, normal);
}

}  // namespace rfield
