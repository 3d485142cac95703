#pragma once

#include <cmath>

#include "rfield/vec.hpp"

namespace rfield {

/// Forward-mode dual number carrying a value and its spatial gradient.
///
/// Every operation computes the value part with exactly the same floating
/// point expression as the plain `double` overloads below, so a field
/// evaluated with `Dual` reproduces the `double` evaluation bit for bit.
struct Dual {
    double value = 0.0;
    Vec grad;

    Dual() = default;
    Dual(double v, Vec g) : value{v}, grad{g} {}

    /// Constant with a zero gradient of dimension `dim`.
    static Dual constant(double v, std::size_t dim) { return Dual{v, Vec::zero(dim)}; }

    /// Seed coordinate `axis` of a point: d(x_axis)/dx = e_axis.
    static Dual variable(double v, std::size_t axis, std::size_t dim) {
        Vec g = Vec::zero(dim);
        g[axis] = 1.0;
        return Dual{v, g};
    }
};

inline Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.grad + b.grad}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.grad - b.grad}; }
inline Dual operator-(const Dual& a) { return {-a.value, -a.grad}; }
inline Dual operator*(const Dual& a, const Dual& b) {
    return {a.value * b.value, a.grad * b.value + b.grad * a.value};
}
inline Dual operator/(const Dual& a, const Dual& b) {
    const double q = a.value / b.value;
    return {q, (a.grad - b.grad * q) * (1.0 / b.value)};
}

inline Dual operator+(const Dual& a, double b) { return {a.value + b, a.grad}; }
inline Dual operator+(double a, const Dual& b) { return {a + b.value, b.grad}; }
inline Dual operator-(const Dual& a, double b) { return {a.value - b, a.grad}; }
inline Dual operator-(double a, const Dual& b) { return {a - b.value, -b.grad}; }
inline Dual operator*(const Dual& a, double b) { return {a.value * b, a.grad * b}; }
inline Dual operator*(double a, const Dual& b) { return {a * b.value, b.grad * a}; }
inline Dual operator/(const Dual& a, double b) { return {a.value / b, a.grad * (1.0 / b)}; }
inline Dual operator/(double a, const Dual& b) {
    const double q = a / b.value;
    return {q, b.grad * (-q / b.value)};
}

// Scalar kernels shared by the double and Dual paths. The field code is
// written once against these names and instantiated for both types.

inline double value_of(double a) { return a; }
inline double value_of(const Dual& a) { return a.value; }

inline double lift(double v, double) { return v; }
inline Dual lift(double v, const Dual& like) { return Dual::constant(v, like.grad.dim()); }

inline double sqrt_(double a) { return std::sqrt(a); }
/// sqrt with the convention d(sqrt u) = 0 where u == 0, so corners of the
/// R-functions produce a bounded (zero) push instead of inf/nan.
inline Dual sqrt_(const Dual& a) {
    const double r = std::sqrt(a.value);
    if (r == 0.0) return Dual::constant(r, a.grad.dim());
    return {r, a.grad * (0.5 / r)};
}

inline double abs_(double a) { return std::fabs(a); }
/// |u| with the one-sided derivative from u > 0 at u == 0.
inline Dual abs_(const Dual& a) {
    if (a.value < 0.0) return -a;
    return a;
}

inline double pow_(double a, double e) { return std::pow(a, e); }
inline Dual pow_(const Dual& a, double e) {
    const double v = std::pow(a.value, e);
    if (a.value == 0.0) return Dual::constant(v, a.grad.dim());
    return {v, a.grad * (e * std::pow(a.value, e - 1.0))};
}

/// sqrt(a^2 + b^2). At the origin of (a, b) the derivative is taken as the
/// one-sided limit along a > 0 with b of higher order, i.e. grad a. This is
/// what keeps |grad| = 1 on the zero set of trimmed carriers.
inline double root_sum_squares(double a, double b) { return std::sqrt(a * a + b * b); }
inline Dual root_sum_squares(const Dual& a, const Dual& b) {
    const double r = std::sqrt(a.value * a.value + b.value * b.value);
    if (r == 0.0) return {r, a.grad};
    return {r, (a.grad * a.value + b.grad * b.value) * (1.0 / r)};
}

}  // namespace rfield
