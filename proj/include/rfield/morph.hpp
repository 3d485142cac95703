#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <variant>

#include "rfield/field.hpp"

namespace rfield {

/// Time-varying blend from an initial field to a target field.
struct MorphSchedule {
    FieldExpr initial;
    FieldExpr target;
    double p = 0.2;        ///< ramp rate, 1/s
    double s = 0.0;        ///< R-conjunction parameter used by the blend
    double t_start = 0.0;  ///< time at which the ramp starts, s

    bool operator==(const MorphSchedule&) const = default;
};

inline MorphSchedule make_morph(FieldExpr initial, FieldExpr target, double p = 0.2, double s = 0.0,
                                double t_start = 0.0) {
    if (initial.dimension() != target.dimension())
        throw DimensionError("morph endpoints have different dimensions");
    if (!(p > 0.0)) throw DegenerateError("morph ramp rate p must be positive");
    if (!(s >= 0.0)) throw DegenerateError("morph s must be >= 0");
    return MorphSchedule{std::move(initial), std::move(target), p, s, t_start};
}

/// (e^{pt} - 1) / (e^{pt} + 1): 0 at t = 0, increasing towards 1.
/// Negative t is clamped to 0.
inline double ramp(double t, double p, Diagnostics* diag = nullptr) {
    if (t < 0.0) {
        if (diag != nullptr) diag->push_back({Diagnostic::Kind::negative_time, "ramp time clamped to 0"});
        t = 0.0;
    }
    const double em1 = std::expm1(p * t);
    if (std::isinf(em1)) return 1.0;
    return em1 / (em1 + 2.0);
}

template <class T>
struct BlendWeights {
    T w1;  ///< weight of the initial field
    T w2;  ///< weight of the target field
    T g1;
    T g2;
};

namespace detail {

inline std::string point_string(const Point& x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < x.dim(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

template <class T>
BlendWeights<T> blend(const T& phi_i, const T& phi_f, double f, double s, const Point& x, double t,
                      const Tolerances& tol) {
    const T g1 = r_conjunction(phi_i, lift(-f, phi_i), s);
    const T g2 = r_conjunction(phi_f, lift(f - 1.0, phi_f), s);
    const T sum = g1 + g2;
    if (std::fabs(value_of(sum)) < tol.degenerate_blend) {
        throw DegenerateBlendError("degenerate blend (g1 + g2 = 0) at x = " + point_string(x) +
                                       ", t = " + std::to_string(t),
                                   t);
    }
    // w1 = g2 / (g1 + g2); formed as 1 - w2 so the weights sum to exactly 1.
    const T w2 = g1 / sum;
    const T w1 = 1.0 - w2;
    return {w1, w2, g1, g2};
}

}  // namespace detail

inline BlendWeights<double> blend_weights(const Point& x, double t, const MorphSchedule& sched,
                                          const Tolerances& tol = default_tolerances) {
    const double f = ramp(t - sched.t_start, sched.p);
    return detail::blend(eval(sched.initial, x), eval(sched.target, x), f, sched.s, x, t, tol);
}

/// True once the ramp is within tol.morph_complete of 1; from then on the
/// target field is used directly.
inline bool morph_complete(const MorphSchedule& sched, double t, const Tolerances& tol = default_tolerances) {
    return ramp(t - sched.t_start, sched.p) >= 1.0 - tol.morph_complete;
}

inline double eval_morph(const MorphSchedule& sched, const Point& x, double t,
                         const Tolerances& tol = default_tolerances) {
    const double f = ramp(t - sched.t_start, sched.p);
    if (f >= 1.0 - tol.morph_complete) return eval(sched.target, x);
    const double phi_i = eval(sched.initial, x);
    const double phi_f = eval(sched.target, x);
    const auto w = detail::blend(phi_i, phi_f, f, sched.s, x, t, tol);
    return w.w1 * phi_i + w.w2 * phi_f;
}

/// Spatial gradient of the blended field at frozen t.
inline GradientSample gradient_morph(const MorphSchedule& sched, const Point& x, double t,
                                     const Tolerances& tol = default_tolerances) {
    const double f = ramp(t - sched.t_start, sched.p);
    if (f >= 1.0 - tol.morph_complete) return gradient(sched.target, x);
    check_point_dim(sched.initial, x);
    check_point_dim(sched.target, x);
    const auto cx = seeded_coords_of(x);
    const Dual phi_i = eval_at(sched.initial, cx);
    const Dual phi_f = eval_at(sched.target, cx);
    const auto w = detail::blend(phi_i, phi_f, f, sched.s, x, t, tol);
    const Dual out = w.w1 * phi_i + w.w2 * phi_f;
    return {out.value, out.grad};
}

/// A static field or a morph, evaluated at (x, t).
class TimeField {
  public:
    TimeField(FieldExpr e) : v_{std::move(e)} {}  // NOLINT(google-explicit-constructor)
    TimeField(MorphSchedule m) : v_{std::move(m)} {}  // NOLINT(google-explicit-constructor)

    [[nodiscard]] std::size_t dimension() const {
        return std::visit(overloaded{[](const FieldExpr& e) { return e.dimension(); },
                                     [](const MorphSchedule& m) { return m.initial.dimension(); }},
                          v_);
    }

    [[nodiscard]] double eval(const Point& x, double t) const {
        return std::visit(overloaded{[&](const FieldExpr& e) { return rfield::eval(e, x); },
                                     [&](const MorphSchedule& m) { return eval_morph(m, x, t); }},
                          v_);
    }

    [[nodiscard]] GradientSample gradient(const Point& x, double t) const {
        return std::visit(overloaded{[&](const FieldExpr& e) { return rfield::gradient(e, x); },
                                     [&](const MorphSchedule& m) { return gradient_morph(m, x, t); }},
                          v_);
    }

    [[nodiscard]] bool is_morph() const noexcept { return std::holds_alternative<MorphSchedule>(v_); }
    [[nodiscard]] const MorphSchedule* morph() const noexcept { return std::get_if<MorphSchedule>(&v_); }
    [[nodiscard]] const FieldExpr* field() const noexcept { return std::get_if<FieldExpr>(&v_); }

    /// The field the run is ultimately steering towards.
    [[nodiscard]] const FieldExpr& final_field() const {
        if (const auto* m = morph()) return m->target;
        return std::get<FieldExpr>(v_);
    }

  private:
    std::variant<FieldExpr, MorphSchedule> v_;
};

}  // namespace rfield
