#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rfield/dual.hpp"
#include "rfield/errors.hpp"

namespace rfield {

// Scalar R-function kernels. Each is a template over `double` and `Dual` so
// that the evaluator and the forward-mode gradient share one code path.

template <class T>
T r_negation(const T& w) {
    return -w;
}

namespace detail {

template <class T>
T r_and_or(const T& w1, const T& w2, double s, double sign, Diagnostics* diag) {
    T rad = w1 * w1 + w2 * w2 - 2.0 * s * w1 * w2;
    if (value_of(rad) < 0.0) {
        // only reachable for s > 1 (or by rounding when s == 1)
        if (diag != nullptr && s > 1.0) {
            diag->push_back({Diagnostic::Kind::radicand_clamped,
                             "R-function radicand clamped to 0 (s = " + std::to_string(s) + ")"});
        }
        rad = lift(0.0, w1);
    }
    return (w1 + w2 + sign * sqrt_(rad)) / (1.0 + s);
}

}  // namespace detail

/// Union: positive iff w1 > 0 or w2 > 0.
template <class T>
T r_disjunction(const T& w1, const T& w2, double s = 0.0, Diagnostics* diag = nullptr) {
    return detail::r_and_or(w1, w2, s, 1.0, diag);
}

/// Intersection: positive iff w1 > 0 and w2 > 0.
template <class T>
T r_conjunction(const T& w1, const T& w2, double s = 0.0, Diagnostics* diag = nullptr) {
    return detail::r_and_or(w1, w2, s, -1.0, diag);
}

/// Two-piece R-equivalence phi1 phi2 / (phi1^m + phi2^m)^(1/m) for
/// non-negative inputs. Both zero returns the limit value 0.
template <class T>
T r_equivalence_pair(const T& phi1, const T& phi2, int m) {
    if (m < 1) throw DegenerateError("R-equivalence order m must be >= 1");
    if (value_of(phi1) == 0.0 && value_of(phi2) == 0.0) return lift(0.0, phi1);
    const double em = static_cast<double>(m);
    return phi1 * phi2 / pow_(pow_(phi1, em) + pow_(phi2, em), 1.0 / em);
}

namespace detail {

// 1 / (sum_i phi_i^-m)^(1/m), evaluated as
// phi_min / (sum_i (phi_min / phi_i)^m)^(1/m) so nothing overflows.
inline double equivalence_value(std::span<const double> phis, int m) {
    const double mn = *std::min_element(phis.begin(), phis.end());
    if (mn == 0.0) return 0.0;
    const double em = static_cast<double>(m);
    double sum = 0.0;
    for (double p : phis) sum += std::pow(mn / p, em);
    return mn / std::pow(sum, 1.0 / em);
}

inline void check_equivalence_args(std::size_t n, int m) {
    if (n < 2) throw DegenerateError("R-equivalence needs at least two pieces");
    if (m < 1) throw DegenerateError("R-equivalence order m must be >= 1");
}

}  // namespace detail

/// n-piece R-equivalence over non-negative values.
inline double r_equivalence_n(std::span<const double> phis, int m) {
    detail::check_equivalence_args(phis.size(), m);
    return detail::equivalence_value(phis, m);
}

/// Dual overload. d phi / d phi_k = (phi / phi_k)^(m+1); when exactly one
/// piece is zero the result follows that piece, at vertices it is flat.
inline Dual r_equivalence_n(std::span<const Dual> phis, int m) {
    detail::check_equivalence_args(phis.size(), m);
    std::vector<double> vals;
    vals.reserve(phis.size());
    for (const auto& p : phis) vals.push_back(p.value);
    const double v = detail::equivalence_value(vals, m);
    const std::size_t dim = phis.front().grad.dim();
    Dual out = Dual::constant(v, dim);
    if (v == 0.0) {
        std::size_t zeros = 0;
        const Dual* hit = nullptr;
        for (const auto& p : phis)
            if (p.value == 0.0) {
                ++zeros;
                hit = &p;
            }
        if (zeros == 1) out.grad = hit->grad;
        return out;
    }
    const double e = static_cast<double>(m) + 1.0;
    for (const auto& p : phis) out.grad += p.grad * std::pow(v / p.value, e);
    return out;
}

/// Trim the zero set of carrier `f` to the region where `t` >= 0:
/// sqrt(f^2 + ((sqrt(t^2 + f^4) - t) / 2)^2). Non-negative everywhere.
template <class T>
T trim(const T& f, const T& t) {
    const T f2 = f * f;
    const T lifted = (sqrt_(t * t + f2 * f2) - t) / 2.0;
    return root_sum_squares(f, lifted);
}

}  // namespace rfield
