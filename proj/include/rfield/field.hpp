#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "rfield/dual.hpp"
#include "rfield/errors.hpp"
#include "rfield/primitives.hpp"
#include "rfield/rfunctions.hpp"
#include "rfield/tolerances.hpp"
#include "rfield/vec.hpp"

namespace rfield {

struct FieldNode;

/// Immutable, shareable expression tree describing an approximate distance
/// field. Copies share structure; nodes are never mutated after creation.
class FieldExpr {
  public:
    FieldExpr() = default;
    explicit FieldExpr(std::shared_ptr<const FieldNode> n) : node_{std::move(n)} {}

    [[nodiscard]] const FieldNode& node() const { return *node_; }
    [[nodiscard]] bool empty() const noexcept { return node_ == nullptr; }

    /// Dimension of the first leaf. Mixed trees are reported by validate().
    [[nodiscard]] std::size_t dimension() const;

    friend bool operator==(const FieldExpr& a, const FieldExpr& b);

  private:
    std::shared_ptr<const FieldNode> node_;
};

struct Circle {
    Point center;
    double radius = 1.0;
    bool operator==(const Circle&) const = default;
};

struct Segment {
    Point p1;
    Point p2;
    bool operator==(const Segment&) const = default;
};

struct Sphere {
    Point center;
    double radius = 1.0;
    bool normalized = true;
    bool operator==(const Sphere&) const = default;
};

/// Half-space (x - origin) . normal >= 0. Also used in 2-D as a half-plane.
struct Plane {
    Point origin;
    Vec normal;
    bool operator==(const Plane&) const = default;
};

struct Negation {
    FieldExpr child;
    bool operator==(const Negation&) const = default;
};

struct Disjunction {
    double s = 0.0;
    FieldExpr left;
    FieldExpr right;
    bool operator==(const Disjunction&) const = default;
};

struct Conjunction {
    double s = 0.0;
    FieldExpr left;
    FieldExpr right;
    bool operator==(const Conjunction&) const = default;
};

/// Joins the zero sets of its children; children are taken by |value|.
struct Equivalence {
    int m = 2;
    std::vector<FieldExpr> children;
    bool operator==(const Equivalence&) const = default;
};

/// Keeps the part of base's zero set where trimmer >= 0.
struct Trim {
    FieldExpr base;
    FieldExpr trimmer;
    bool operator==(const Trim&) const = default;
};

struct FieldNode {
    std::variant<Circle, Segment, Sphere, Plane, Negation, Disjunction, Conjunction, Equivalence, Trim> v;
};

inline bool operator==(const FieldExpr& a, const FieldExpr& b) {
    if (a.node_ == b.node_) return true;
    if (!a.node_ || !b.node_) return false;
    return a.node_->v == b.node_->v;
}

// ---------------------------------------------------------------------------
// Construction

namespace detail {
template <class N>
FieldExpr make_node(N n) {
    return FieldExpr(std::make_shared<const FieldNode>(FieldNode{std::move(n)}));
}
}  // namespace detail

inline FieldExpr circle(Point center, double radius) {
    if (!(radius > 0.0)) throw DegenerateError("circle radius must be positive");
    return detail::make_node(Circle{center, radius});
}

inline FieldExpr segment(Point p1, Point p2) { return detail::make_node(Segment{p1, p2}); }

inline FieldExpr sphere(Point center, double radius, bool normalized = true) {
    if (!(radius > 0.0)) throw DegenerateError("sphere radius must be positive");
    return detail::make_node(Sphere{center, radius, normalized});
}

inline FieldExpr plane(Point origin, Vec normal, const Tolerances& tol = default_tolerances) {
    if (origin.dim() != normal.dim()) throw DimensionError("plane origin and normal differ in dimension");
    if (std::fabs(norm(normal) - 1.0) > tol.unit_normal) throw DegenerateError("plane normal must be unit length");
    return detail::make_node(Plane{origin, normal});
}

inline FieldExpr negate(FieldExpr e) { return detail::make_node(Negation{std::move(e)}); }

inline FieldExpr disjunction(FieldExpr a, FieldExpr b, double s = 0.0) {
    return detail::make_node(Disjunction{s, std::move(a), std::move(b)});
}

inline FieldExpr conjunction(FieldExpr a, FieldExpr b, double s = 0.0) {
    return detail::make_node(Conjunction{s, std::move(a), std::move(b)});
}

inline FieldExpr equivalence(int m, std::vector<FieldExpr> children) {
    return detail::make_node(Equivalence{m, std::move(children)});
}

inline FieldExpr trimmed(FieldExpr base, FieldExpr trimmer) {
    return detail::make_node(Trim{std::move(base), std::move(trimmer)});
}

// ---------------------------------------------------------------------------
// Evaluation

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

inline std::size_t FieldExpr::dimension() const {
    return std::visit(overloaded{
                          [](const Circle& c) { return c.center.dim(); },
                          [](const Segment& s) { return s.p1.dim(); },
                          [](const Sphere& s) { return s.center.dim(); },
                          [](const Plane& p) { return p.origin.dim(); },
                          [](const Negation& n) { return n.child.dimension(); },
                          [](const Disjunction& d) { return d.left.dimension(); },
                          [](const Conjunction& c) { return c.left.dimension(); },
                          [](const Equivalence& e) {
                              return e.children.empty() ? std::size_t{0} : e.children.front().dimension();
                          },
                          [](const Trim& t) { return t.base.dimension(); },
                      },
                      node().v);
}

/// Recursive evaluation for T = double (value) or T = Dual (value + gradient).
template <class T>
T eval_at(const FieldExpr& expr, const Coords<T>& x) {
    return std::visit(
        overloaded{
            [&](const Circle& c) -> T {
                detail::require_dim(x.dim, 2, "circle");
                return circle_field(x, c.center, c.radius);
            },
            [&](const Segment& s) -> T {
                detail::require_dim(x.dim, 2, "segment");
                if (norm(s.p2 - s.p1) < default_tolerances.min_segment_length)
                    throw DegenerateError("degenerate segment");
                return segment_field(x, s.p1, s.p2);
            },
            [&](const Sphere& s) -> T {
                detail::require_dim(x.dim, 3, "sphere");
                return sphere_field(x, s.center, s.radius, s.normalized);
            },
            [&](const Plane& p) -> T {
                detail::require_dim(x.dim, p.origin.dim(), "plane");
                return plane_field(x, p.origin, p.normal);
            },
            [&](const Negation& n) -> T { return r_negation(eval_at(n.child, x)); },
            [&](const Disjunction& d) -> T {
                return r_disjunction(eval_at(d.left, x), eval_at(d.right, x), d.s);
            },
            [&](const Conjunction& c) -> T {
                return r_conjunction(eval_at(c.left, x), eval_at(c.right, x), c.s);
            },
            [&](const Equivalence& e) -> T {
                std::vector<T> vals;
                vals.reserve(e.children.size());
                for (const auto& ch : e.children) vals.push_back(abs_(eval_at(ch, x)));
                return r_equivalence_n(std::span<const T>(vals), e.m);
            },
            [&](const Trim& t) -> T { return trim(eval_at(t.base, x), eval_at(t.trimmer, x)); },
        },
        expr.node().v);
}

inline void check_point_dim(const FieldExpr& expr, const Point& x) {
    if (x.dim() != expr.dimension()) {
        throw DimensionError("point is " + std::to_string(x.dim()) + "-D but field is " +
                             std::to_string(expr.dimension()) + "-D");
    }
}

/// Field value at x.
inline double eval(const FieldExpr& expr, const Point& x) {
    check_point_dim(expr, x);
    return eval_at(expr, coords_of(x));
}

/// Value and gradient of a field at one point.
struct GradientSample {
    double value = 0.0;
    Vec grad;
};

/// Forward-mode gradient. `value` is bit-identical to eval(expr, x).
inline GradientSample gradient(const FieldExpr& expr, const Point& x) {
    check_point_dim(expr, x);
    const Dual d = eval_at(expr, seeded_coords_of(x));
    return {d.value, d.grad};
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool finite_point(const Vec& p) { return all_finite(p); }

inline void validate_into(const FieldExpr& expr, std::set<std::size_t>& dims, Diagnostics& out,
                          const Tolerances& tol) {
    auto emit = [&](Diagnostic::Kind k, std::string msg) { out.push_back({k, std::move(msg)}); };
    std::visit(
        overloaded{
            [&](const Circle& c) {
                dims.insert(c.center.dim());
                if (c.center.dim() != 2) emit(Diagnostic::Kind::dimension_mismatch, "circle must be 2-D");
                if (!finite_point(c.center) || !std::isfinite(c.radius))
                    emit(Diagnostic::Kind::nonfinite_parameter, "circle has non-finite parameters");
                if (!(c.radius > 0.0)) emit(Diagnostic::Kind::nonpositive_radius, "circle radius <= 0");
            },
            [&](const Segment& s) {
                dims.insert(s.p1.dim());
                dims.insert(s.p2.dim());
                if (s.p1.dim() != 2 || s.p2.dim() != 2)
                    emit(Diagnostic::Kind::dimension_mismatch, "segment must be 2-D");
                if (!finite_point(s.p1) || !finite_point(s.p2))
                    emit(Diagnostic::Kind::nonfinite_parameter, "segment has non-finite endpoints");
                else if (s.p1.dim() == s.p2.dim() && norm(s.p2 - s.p1) < tol.min_segment_length)
                    emit(Diagnostic::Kind::degenerate_segment, "segment endpoints coincide");
            },
            [&](const Sphere& s) {
                dims.insert(s.center.dim());
                if (s.center.dim() != 3) emit(Diagnostic::Kind::dimension_mismatch, "sphere must be 3-D");
                if (!finite_point(s.center) || !std::isfinite(s.radius))
                    emit(Diagnostic::Kind::nonfinite_parameter, "sphere has non-finite parameters");
                if (!(s.radius > 0.0)) emit(Diagnostic::Kind::nonpositive_radius, "sphere radius <= 0");
            },
            [&](const Plane& p) {
                dims.insert(p.origin.dim());
                if (p.origin.dim() != p.normal.dim())
                    emit(Diagnostic::Kind::dimension_mismatch, "plane origin/normal dimension differ");
                if (!finite_point(p.origin) || !finite_point(p.normal))
                    emit(Diagnostic::Kind::nonfinite_parameter, "plane has non-finite parameters");
                else if (std::fabs(norm(p.normal) - 1.0) > tol.unit_normal)
                    emit(Diagnostic::Kind::nonunit_normal, "plane normal is not unit length");
            },
            [&](const Negation& n) { validate_into(n.child, dims, out, tol); },
            [&](const Disjunction& d) {
                if (!(d.s >= 0.0)) emit(Diagnostic::Kind::negative_s, "disjunction s < 0");
                if (d.s > 1.0) emit(Diagnostic::Kind::s_above_one, "disjunction s > 1: radicand may be clamped");
                validate_into(d.left, dims, out, tol);
                validate_into(d.right, dims, out, tol);
            },
            [&](const Conjunction& c) {
                if (!(c.s >= 0.0)) emit(Diagnostic::Kind::negative_s, "conjunction s < 0");
                if (c.s > 1.0) emit(Diagnostic::Kind::s_above_one, "conjunction s > 1: radicand may be clamped");
                validate_into(c.left, dims, out, tol);
                validate_into(c.right, dims, out, tol);
            },
            [&](const Equivalence& e) {
                if (e.m < 1) emit(Diagnostic::Kind::bad_m, "R-equivalence m < 1");
                if (e.children.size() < 2) emit(Diagnostic::Kind::too_few_children, "R-equivalence needs >= 2 pieces");
                for (const auto& ch : e.children) validate_into(ch, dims, out, tol);
            },
            [&](const Trim& t) {
                validate_into(t.base, dims, out, tol);
                validate_into(t.trimmer, dims, out, tol);
            },
        },
        expr.node().v);
}

}  // namespace detail

/// Structural checks. An empty result means the expression is well formed.
inline Diagnostics validate(const FieldExpr& expr, const Tolerances& tol = default_tolerances) {
    Diagnostics out;
    std::set<std::size_t> dims;
    detail::validate_into(expr, dims, out, tol);
    if (dims.size() > 1) out.push_back({Diagnostic::Kind::dimension_mismatch, "expression mixes 2-D and 3-D leaves"});
    return out;
}

inline bool has_diagnostic(const Diagnostics& d, Diagnostic::Kind k) {
    for (const auto& x : d)
        if (x.kind == k) return true;
    return false;
}

/// Number of nodes in the tree (shared subtrees counted once per use).
inline std::size_t node_count(const FieldExpr& expr) {
    return std::visit(overloaded{
                          [](const Negation& n) { return 1 + node_count(n.child); },
                          [](const Disjunction& d) { return 1 + node_count(d.left) + node_count(d.right); },
                          [](const Conjunction& c) { return 1 + node_count(c.left) + node_count(c.right); },
                          [](const Equivalence& e) {
                              std::size_t n = 1;
                              for (const auto& ch : e.children) n += node_count(ch);
                              return n;
                          },
                          [](const Trim& t) { return 1 + node_count(t.base) + node_count(t.trimmer); },
                          [](const auto&) -> std::size_t { return 1; },
                      },
                      expr.node().v);
}

}  // namespace rfield
