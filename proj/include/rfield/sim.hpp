#pragma once

// Boundary-constrained granular robot: a closed ring of actuated disks
// joined by springs around a bidisperse packing of passive grains, driven
// by the gradient of a distance field. A 3-D mode runs independent point
// agents (optionally joined by an icosphere spring mesh).

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rfield/errors.hpp"
#include "rfield/morph.hpp"
#include "rfield/tolerances.hpp"
#include "rfield/vec.hpp"

namespace rfield::sim {

enum class BodyKind { boundary_robot, interior_grain };
enum class ControlMode { paper_literal, squared };

struct BodyState {
    Point position;
    Vec velocity;
    double orientation = 0.0;       ///< rad, 2-D only
    double angular_velocity = 0.0;  ///< rad/s, 2-D only
    double radius = 0.03;
    double mass = 0.2;
    BodyKind kind = BodyKind::boundary_robot;

    bool operator==(const BodyState&) const = default;
};

struct SpringLink {
    std::size_t i = 0;
    std::size_t j = 0;
    double stiffness = 50.0;  ///< N/m
    double rest_length = 0.0;

    bool operator==(const SpringLink&) const = default;
};

struct WorldState {
    std::size_t dim = 2;
    std::vector<BodyState> bodies;
    std::vector<SpringLink> springs;
    double time = 0.0;
    std::uint64_t rng_state = 0;
    /// Control applied to each body on the last step (zero for grains).
    std::vector<Vec> control;
    std::uint64_t degenerate_blends = 0;
    std::uint64_t coincident_springs = 0;

    bool operator==(const WorldState&) const = default;
};

/// Series of impulses applied inside [start, end].
struct DisturbanceSpec {
    double start = 10.0;
    double end = 15.0;
    int count = 0;              ///< number of pulses, evenly spaced; 0 disables
    double impulse = 0.05;      ///< N s per targeted body
    bool random_direction = true;
    Vec direction{1.0, 0.0};    ///< used when random_direction is false
    std::vector<std::size_t> targets;  ///< empty: all boundary robots

    bool operator==(const DisturbanceSpec&) const = default;
};

struct SimConfig {
    std::size_t dim = 2;
    std::size_t n_boundary = 30;
    std::size_t n_interior = 180;
    double robot_radius = 0.03;
    double robot_mass = 0.200;
    double grain_radius = 0.0325;  ///< small grain; the large one is sqrt(2) times this
    double grain_mass = 0.030;
    double friction = 0.2;
    double spring_stiffness = 50.0;
    double alpha = 1.0;
    ControlMode mode = ControlMode::squared;
    double contact_stiffness = 5000.0;
    double contact_damping = 5.0;
    double tangential_damping = 5.0;  ///< slope of the regularized Coulomb law, N s/m
    double drag = 2.0;
    double dt = 4e-4;
    double duration = 60.0;
    double sample_every = 0.1;
    std::uint64_t seed = 1;
    /// Ring radius in 2-D (0 = sized to the packing); icosphere radius in 3-D.
    double start_radius = 0.0;
    Point start_center{0.0, 0.0};
    Point target{0.0, 0.0};
    bool membrane_contact = true;  ///< grains collide with the ring springs (2-D)
    bool membrane_3d = false;      ///< springs along icosphere edges (3-D)
    DisturbanceSpec disturbance;

    bool operator==(const SimConfig&) const = default;
};

/// Defaults for the given dimension: 30 robots + 180 grains in 2-D,
/// 162 point agents on a 0.5 m icosphere in 3-D.
inline SimConfig default_config(std::size_t dim = 2) {
    SimConfig c;
    if (dim == 3) {
        c.dim = 3;
        c.n_boundary = 162;
        c.n_interior = 0;
        c.start_radius = 0.5;
        c.start_center = Point{0.0, 0.0, 0.0};
        c.target = Point{0.0, 0.0, 0.0};
        c.disturbance.direction = Vec{1.0, 0.0, 0.0};
        c.duration = 30.0;
    }
    return c;
}

/// Documented explicit-integration bound dt <= 0.2 sqrt(m_min / k_c).
inline double stability_bound(const SimConfig& c) {
    double m_min = c.robot_mass;
    if (c.n_interior > 0) m_min = std::min(m_min, c.grain_mass);
    return 0.2 * std::sqrt(m_min / c.contact_stiffness);
}

inline void check_config(const SimConfig& c) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string("config: ") + what + " must be positive");
    };
    auto nonneg = [](double v, const char* what) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(std::string("config: ") + what + " must be >= 0");
    };
    if (c.dim != 2 && c.dim != 3) throw Error("config: dim must be 2 or 3");
    positive(c.robot_radius, "robot_radius");
    positive(c.robot_mass, "robot_mass");
    positive(c.grain_radius, "grain_radius");
    positive(c.grain_mass, "grain_mass");
    positive(c.spring_stiffness, "spring_stiffness");
    positive(c.contact_stiffness, "contact_stiffness");
    positive(c.dt, "dt");
    positive(c.sample_every, "sample_every");
    nonneg(c.friction, "friction");
    nonneg(c.contact_damping, "contact_damping");
    nonneg(c.tangential_damping, "tangential_damping");
    nonneg(c.drag, "drag");
    nonneg(c.duration, "duration");
    nonneg(c.start_radius, "start_radius");
    if (!std::isfinite(c.alpha)) throw Error("config: alpha must be finite");
    if (c.start_center.dim() != c.dim || c.target.dim() != c.dim)
        throw DimensionError("config: start_center/target dimension differs from dim");
    if (c.dim == 2 && c.n_boundary < 3) throw Error("config: a 2-D ring needs at least 3 robots");
    if (c.dim == 3 && c.n_boundary != 12 && c.n_boundary != 42 && c.n_boundary != 162 && c.n_boundary != 642)
        throw Error("config: 3-D agent count must be an icosphere vertex count (12, 42, 162, 642)");
    const auto& d = c.disturbance;
    if (d.count > 0) {
        if (!(d.start < d.end)) throw Error("config: disturbance window needs start < end");
        if (!d.random_direction && d.direction.dim() != c.dim)
            throw DimensionError("config: disturbance direction dimension differs from dim");
    }
}

// ---------------------------------------------------------------------------
// Randomness: splitmix64, so the whole generator state is one 64-bit word.

inline std::uint64_t next_random(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform in [0, 1).
inline double next_uniform(std::uint64_t& state) {
    return static_cast<double>(next_random(state) >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// World construction

namespace detail {

/// Vertices and edges of an icosphere with `subdivisions` midpoint splits.
inline std::pair<std::vector<Vec>, std::vector<std::pair<std::size_t, std::size_t>>> icosphere(int subdivisions) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec> v{{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                       {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& p : v) p *= 1.0 / norm(p);
    std::vector<std::array<std::size_t, 3>> faces{
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::size_t, std::size_t>, std::size_t> mid;
        auto midpoint = [&](std::size_t a, std::size_t b) {
            const auto key = std::minmax(a, b);
            if (auto it = mid.find(key); it != mid.end()) return it->second;
            Vec m = (v[a] + v[b]) * 0.5;
            m *= 1.0 / norm(m);
            v.push_back(m);
            mid.emplace(key, v.size() - 1);
            return v.size() - 1;
        };
        std::vector<std::array<std::size_t, 3>> next;
        for (const auto& f : faces) {
            const std::size_t a = midpoint(f[0], f[1]);
            const std::size_t b = midpoint(f[1], f[2]);
            const std::size_t c = midpoint(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        faces = std::move(next);
    }
    std::map<std::pair<std::size_t, std::size_t>, bool> edges;
    for (const auto& f : faces)
        for (int k = 0; k < 3; ++k) edges[std::minmax(f[k], f[(k + 1) % 3])] = true;
    std::vector<std::pair<std::size_t, std::size_t>> e;
    e.reserve(edges.size());
    for (const auto& [k, _] : edges) e.push_back(k);
    return {v, e};
}

inline int icosphere_level(std::size_t n) {
    switch (n) {
        case 12: return 0;
        case 42: return 1;
        case 162: return 2;
        case 642: return 3;
        default: throw Error("no icosphere with " + std::to_string(n) + " vertices");
    }
}

/// Lattice sites (hexagonal in 2-D, simple cubic in 3-D) closest to the
/// origin, in a deterministic order.
inline std::vector<Vec> lattice_sites(std::size_t dim, double spacing, std::size_t n) {
    std::vector<Vec> sites;
    if (n == 0) return sites;
    int half = 1;
    while (true) {
        sites.clear();
        if (dim == 2) {
            const double row = spacing * std::sqrt(3.0) / 2.0;
            for (int j = -half; j <= half; ++j)
                for (int i = -half; i <= half; ++i)
                    sites.emplace_back((i + 0.5 * (j & 1)) * spacing, j * row);
        } else {
            for (int k = -half; k <= half; ++k)
                for (int j = -half; j <= half; ++j)
                    for (int i = -half; i <= half; ++i) sites.emplace_back(i * spacing, j * spacing, k * spacing);
        }
        std::stable_sort(sites.begin(), sites.end(), [](const Vec& a, const Vec& b) { return norm_sq(a) < norm_sq(b); });
        // only accept once the n-th site is safely inside the generated block
        if (sites.size() > n && norm(sites[n - 1]) < (half - 1) * spacing * 0.8) break;
        ++half;
    }
    sites.resize(n);
    return sites;
}

}  // namespace detail

/// Ring (or icosphere) of robots around a jittered lattice packing of
/// grains with alternating radii. Deterministic for a given seed.
inline WorldState build_world(const SimConfig& cfg) {
    check_config(cfg);
    WorldState w;
    w.dim = cfg.dim;
    w.rng_state = cfg.seed;
    const double r_small = cfg.grain_radius;
    const double r_large = std::numbers::sqrt2 * cfg.grain_radius;
    const double gap = 0.05 * r_large;
    const double spacing = 2.0 * r_large + gap;

    auto sites = detail::lattice_sites(cfg.dim, spacing, cfg.n_interior);
    double pack_radius = 0.0;
    std::vector<BodyState> grains;
    for (std::size_t k = 0; k < sites.size(); ++k) {
        Vec p = sites[k];
        const double r = (k % 2 == 0) ? r_small : r_large;
        // jitter inside the gap so nothing overlaps at t = 0
        const double amp = 0.5 * (spacing - 2.0 * r_large) * 0.5 + (r_large - r) * 0.5;
        for (std::size_t a = 0; a < cfg.dim; ++a) p[a] += amp * (2.0 * next_uniform(w.rng_state) - 1.0);
        pack_radius = std::max(pack_radius, norm(p) + r);
        BodyState b;
        b.position = p + cfg.start_center;
        b.velocity = Vec::zero(cfg.dim);
        b.radius = r;
        b.mass = cfg.grain_mass;
        b.kind = BodyKind::interior_grain;
        grains.push_back(b);
    }

    double ring = cfg.start_radius;
    if (ring == 0.0) {
        ring = pack_radius + cfg.robot_radius + gap;
        if (cfg.n_interior == 0) ring = std::max(ring, cfg.n_boundary * 2.5 * cfg.robot_radius / (2.0 * std::numbers::pi));
    } else if (cfg.n_interior > 0 && ring < pack_radius + cfg.robot_radius) {
        // count the grains that do fit
        std::size_t fit = 0;
        for (const auto& g : grains)
            if (norm(g.position - cfg.start_center) + g.radius <= ring - cfg.robot_radius) ++fit;
        throw SimulationError("packing failure: only " + std::to_string(fit) + " of " +
                              std::to_string(cfg.n_interior) + " grains fit inside start_radius");
    }

    auto robot = [&](const Vec& p) {
        BodyState b;
        b.position = p;
        b.velocity = Vec::zero(cfg.dim);
        b.radius = cfg.robot_radius;
        b.mass = cfg.robot_mass;
        b.kind = BodyKind::boundary_robot;
        return b;
    };

    if (cfg.dim == 2) {
        for (std::size_t i = 0; i < cfg.n_boundary; ++i) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(cfg.n_boundary);
            BodyState b = robot(cfg.start_center + Vec{ring * std::cos(a), ring * std::sin(a)});
            b.orientation = a;
            w.bodies.push_back(b);
        }
        for (std::size_t i = 0; i < cfg.n_boundary; ++i) {
            const std::size_t j = (i + 1) % cfg.n_boundary;
            w.springs.push_back({i, j, cfg.spring_stiffness, norm(w.bodies[j].position - w.bodies[i].position)});
        }
    } else {
        const auto [verts, edges] = detail::icosphere(detail::icosphere_level(cfg.n_boundary));
        for (const auto& v : verts) w.bodies.push_back(robot(cfg.start_center + v * ring));
        if (cfg.membrane_3d) {
            for (const auto& [i, j] : edges)
                w.springs.push_back({i, j, cfg.spring_stiffness, norm(w.bodies[j].position - w.bodies[i].position)});
        }
    }
    for (auto& g : grains) w.bodies.push_back(g);
    w.control.assign(w.bodies.size(), Vec::zero(cfg.dim));
    return w;
}

// ---------------------------------------------------------------------------
// Forces

using Forces = std::vector<Vec>;

inline Forces zero_forces(const WorldState& w) { return Forces(w.bodies.size(), Vec::zero(w.dim)); }

/// Hooke springs k (|d| - rest) d_hat, equal and opposite on the endpoints.
/// Coincident endpoints exert nothing and are counted in `coincident`.
inline Forces spring_forces(const WorldState& w, std::uint64_t* coincident = nullptr) {
    Forces f = zero_forces(w);
    for (const auto& s : w.springs) {
        const Vec d = w.bodies[s.j].position - w.bodies[s.i].position;
        const double len = norm(d);
        if (len < default_tolerances.coincident_spring) {
            if (coincident != nullptr) ++*coincident;
            continue;
        }
        const Vec pull = d * (s.stiffness * (len - s.rest_length) / len);
        f[s.i] += pull;
        f[s.j] -= pull;
    }
    return f;
}

namespace detail {

/// Penalty normal force plus regularized Coulomb friction between two
/// contact points. `n` points from a to b; returns the force on b.
inline Vec contact_law(const Vec& n, double overlap, const Vec& v_rel, const SimConfig& cfg) {
    const double vn = dot(v_rel, n);
    const double fn = std::max(0.0, cfg.contact_stiffness * overlap - cfg.contact_damping * vn);
    Vec force = n * fn;
    const Vec vt = v_rel - n * vn;
    const double vt_mag = norm(vt);
    if (vt_mag > 0.0 && fn > 0.0) {
        const double ft = std::min(cfg.friction * fn, cfg.tangential_damping * vt_mag);
        force -= vt * (ft / vt_mag);
    }
    return force;
}

inline Vec fallback_normal(std::size_t dim) {
    Vec n = Vec::zero(dim);
    n[0] = 1.0;
    return n;
}

}  // namespace detail

/// Disk/sphere contacts between all bodies (sweep and prune along x), plus
/// grain contacts against the ring springs when membrane_contact is set.
inline Forces contact_forces(const WorldState& w, const SimConfig& cfg) {
    Forces f = zero_forces(w);
    const std::size_t n = w.bodies.size();
    // point agents in 3-D have no extent and do not collide with each other
    auto collides = [&](const BodyState& b) { return w.dim == 2 || b.kind == BodyKind::interior_grain; };

    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (collides(w.bodies[i])) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double la = w.bodies[a].position[0] - w.bodies[a].radius;
        const double lb = w.bodies[b].position[0] - w.bodies[b].radius;
        return la < lb || (la == lb && a < b);
    });

    for (std::size_t oa = 0; oa < order.size(); ++oa) {
        const std::size_t i = order[oa];
        const BodyState& bi = w.bodies[i];
        const double right = bi.position[0] + bi.radius;
        for (std::size_t ob = oa + 1; ob < order.size(); ++ob) {
            const std::size_t j = order[ob];
            const BodyState& bj = w.bodies[j];
            if (bj.position[0] - bj.radius > right) break;
            const Vec d = bj.position - bi.position;
            const double reach = bi.radius + bj.radius;
            const double d2 = norm_sq(d);
            if (d2 >= reach * reach) continue;
            const double dist = std::sqrt(d2);
            const Vec nrm = dist > 1e-12 ? d * (1.0 / dist) : detail::fallback_normal(w.dim);
            const Vec fj = detail::contact_law(nrm, reach - dist, bj.velocity - bi.velocity, cfg);
            f[j] += fj;
            f[i] -= fj;
        }
    }

    if (cfg.membrane_contact && w.dim == 2) {
        for (const auto& s : w.springs) {
            const BodyState& a = w.bodies[s.i];
            const BodyState& b = w.bodies[s.j];
            const Vec ab = b.position - a.position;
            const double ab2 = norm_sq(ab);
            if (ab2 < 1e-18) continue;
            const double lo_x = std::min(a.position[0], b.position[0]);
            const double hi_x = std::max(a.position[0], b.position[0]);
            const double lo_y = std::min(a.position[1], b.position[1]);
            const double hi_y = std::max(a.position[1], b.position[1]);
            for (std::size_t g = 0; g < n; ++g) {
                const BodyState& gr = w.bodies[g];
                if (gr.kind != BodyKind::interior_grain) continue;
                const double r = gr.radius;
                if (gr.position[0] + r < lo_x || gr.position[0] - r > hi_x || gr.position[1] + r < lo_y ||
                    gr.position[1] - r > hi_y)
                    continue;
                const double u = dot(gr.position - a.position, ab) / ab2;
                // endpoints are covered by the disk contacts with the robots
                if (u <= 0.0 || u >= 1.0) continue;
                const Vec p = a.position + ab * u;
                const Vec d = gr.position - p;
                const double dist = norm(d);
                if (dist >= r) continue;
                Vec nrm = dist > 1e-12 ? d * (1.0 / dist) : Vec{-ab[1], ab[0]} * (1.0 / std::sqrt(ab2));
                const Vec vp = a.velocity * (1.0 - u) + b.velocity * u;
                const Vec fg = detail::contact_law(nrm, r - dist, gr.velocity - vp, cfg);
                f[g] += fg;
                f[s.i] -= fg * (1.0 - u);
                f[s.j] -= fg * u;
            }
        }
    }
    return f;
}

/// Per-robot control: paper-literal -alpha grad phi, or squared
/// -alpha phi grad phi. Grains get zero. A degenerate blend reuses the
/// previous control of that robot and is counted in `degenerate`.
inline Forces control_forces(const WorldState& w, const TimeField& field, double alpha, ControlMode mode,
                             std::uint64_t* degenerate = nullptr) {
    if (field.dimension() != w.dim) throw DimensionError("field and world dimensions differ");
    Forces f = zero_forces(w);
    for (std::size_t i = 0; i < w.bodies.size(); ++i) {
        const BodyState& b = w.bodies[i];
        if (b.kind != BodyKind::boundary_robot) continue;
        try {
            const GradientSample g = field.gradient(b.position, w.time);
            f[i] = mode == ControlMode::squared ? g.grad * (-alpha * g.value) : g.grad * (-alpha);
        } catch (const DegenerateBlendError&) {
            if (degenerate != nullptr) ++*degenerate;
            f[i] = i < w.control.size() ? w.control[i] : Vec::zero(w.dim);
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Integration

/// One semi-implicit Euler step of M x'' + (springs) = u + F_c - c_d v.
inline WorldState step(const WorldState& w, const SimConfig& cfg, const TimeField& field, double dt) {
    WorldState out = w;
    const Forces fs = spring_forces(w, &out.coincident_springs);
    const Forces fc = contact_forces(w, cfg);
    const Forces fu = control_forces(w, field, cfg.alpha, cfg.mode, &out.degenerate_blends);
    out.control = fu;
    for (std::size_t i = 0; i < w.bodies.size(); ++i) {
        BodyState& b = out.bodies[i];
        const Vec drag = b.velocity * (-cfg.drag);
        const std::pair<const Vec*, const char*> terms[] = {
            {&fs[i], "spring"}, {&fc[i], "contact"}, {&fu[i], "control"}, {&drag, "drag"}};
        Vec total = Vec::zero(w.dim);
        for (const auto& [v, name] : terms) {
            if (!all_finite(*v))
                throw SimulationError("non-finite " + std::string(name) + " force on body " + std::to_string(i) +
                                      " at t = " + std::to_string(w.time));
            total += *v;
        }
        b.velocity += total * (dt / b.mass);
        b.position += b.velocity * dt;
        b.orientation += b.angular_velocity * dt;
        if (!all_finite(b.position) || !all_finite(b.velocity))
            throw SimulationError("non-finite state of body " + std::to_string(i) + " at t = " +
                                  std::to_string(w.time));
    }
    out.time = w.time + dt;
    return out;
}

/// Velocity kick impulse / m on each target if the world time lies in
/// [t0, t1]; outside the window the world is returned unchanged.
inline WorldState apply_disturbance(const WorldState& w, const Vec& impulse, double t0, double t1,
                                    const std::vector<std::size_t>& targets) {
    if (targets.empty()) throw Error("disturbance needs at least one target body");
    if (!(t0 < t1)) throw Error("disturbance window needs t0 < t1");
    if (impulse.dim() != w.dim) throw DimensionError("impulse dimension differs from world");
    WorldState out = w;
    if (w.time < t0 || w.time > t1) return out;
    for (std::size_t i : targets) {
        if (i >= out.bodies.size()) throw Error("disturbance target " + std::to_string(i) + " out of range");
        out.bodies[i].velocity += impulse * (1.0 / out.bodies[i].mass);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

/// Mean |phi| over the boundary robots.
inline double shape_error(const WorldState& w, const TimeField& field) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& b : w.bodies) {
        if (b.kind != BodyKind::boundary_robot) continue;
        sum += std::fabs(field.eval(b.position, w.time));
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

inline Point center_of_mass(const WorldState& w) {
    Vec acc = Vec::zero(w.dim);
    double m = 0.0;
    for (const auto& b : w.bodies) {
        acc += b.position * b.mass;
        m += b.mass;
    }
    return m > 0.0 ? acc * (1.0 / m) : acc;
}

inline double com_distance(const WorldState& w, const Point& target) { return norm(center_of_mass(w) - target); }

inline Vec total_momentum(const WorldState& w) {
    Vec p = Vec::zero(w.dim);
    for (const auto& b : w.bodies) p += b.velocity * b.mass;
    return p;
}

// ---------------------------------------------------------------------------
// Runs

struct Sample {
    double time = 0.0;
    Point com;
    double shape_error = 0.0;
    double target_distance = 0.0;
    std::vector<Point> positions;
};

struct Trajectory {
    std::size_t dim = 2;
    std::vector<Sample> samples;
    std::uint64_t degenerate_blends = 0;
    std::uint64_t coincident_springs = 0;
    std::size_t steps = 0;
};

inline Sample sample_of(const WorldState& w, const TimeField& field, const Point& target) {
    Sample s;
    s.time = w.time;
    s.com = center_of_mass(w);
    s.shape_error = shape_error(w, field);
    s.target_distance = com_distance(w, target);
    s.positions.reserve(w.bodies.size());
    for (const auto& b : w.bodies) s.positions.push_back(b.position);
    return s;
}

/// Pulse times of a disturbance spec, evenly spaced over the window.
inline std::vector<double> disturbance_times(const DisturbanceSpec& d) {
    std::vector<double> t;
    if (d.count <= 0) return t;
    if (d.count == 1) return {d.start};
    for (int k = 0; k < d.count; ++k) t.push_back(d.start + (d.end - d.start) * k / (d.count - 1));
    return t;
}

/// Step a world under `field` for cfg.duration, sampling every
/// cfg.sample_every seconds. `final_state` receives the last world.
inline Trajectory run(const SimConfig& cfg, const TimeField& field, WorldState* final_state = nullptr) {
    WorldState w = build_world(cfg);
    if (field.dimension() != cfg.dim) throw DimensionError("field and config dimensions differ");
    Trajectory traj;
    traj.dim = cfg.dim;

    const auto steps = static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));
    const auto sample_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.sample_every / cfg.dt)));

    std::vector<std::size_t> targets = cfg.disturbance.targets;
    if (targets.empty())
        for (std::size_t i = 0; i < w.bodies.size(); ++i)
            if (w.bodies[i].kind == BodyKind::boundary_robot) targets.push_back(i);
    const auto pulses = disturbance_times(cfg.disturbance);
    std::size_t next_pulse = 0;

    traj.samples.push_back(sample_of(w, field, cfg.target));
    for (std::size_t k = 1; k <= steps; ++k) {
        while (next_pulse < pulses.size() && pulses[next_pulse] <= w.time) {
            Vec dir = cfg.disturbance.direction;
            if (cfg.disturbance.random_direction) {
                dir = Vec::zero(cfg.dim);
                if (cfg.dim == 2) {
                    const double a = 2.0 * std::numbers::pi * next_uniform(w.rng_state);
                    dir = Vec{std::cos(a), std::sin(a)};
                } else {
                    const double z = 2.0 * next_uniform(w.rng_state) - 1.0;
                    const double a = 2.0 * std::numbers::pi * next_uniform(w.rng_state);
                    const double r = std::sqrt(1.0 - z * z);
                    dir = Vec{r * std::cos(a), r * std::sin(a), z};
                }
            }
            const double len = norm(dir);
            if (len > 0.0) dir *= cfg.disturbance.impulse / len;
            w = apply_disturbance(w, dir, cfg.disturbance.start, cfg.disturbance.end, targets);
            ++next_pulse;
        }
        w = step(w, cfg, field, cfg.dt);
        // time from the step counter keeps sample times exact multiples of dt
        w.time = static_cast<double>(k) * cfg.dt;
        if (k % sample_stride == 0 || k == steps) traj.samples.push_back(sample_of(w, field, cfg.target));
    }
    traj.degenerate_blends = w.degenerate_blends;
    traj.coincident_springs = w.coincident_springs;
    traj.steps = steps;
    if (final_state != nullptr) *final_state = std::move(w);
    return traj;
}

// ---------------------------------------------------------------------------
// key = value configuration files

namespace detail {

inline std::string trim_ws(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
        throw Error("config: '" + key + "' expects a number, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw Error("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline std::vector<std::string> split_commas(const std::string& v) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(v);
    while (std::getline(is, cur, ',')) parts.push_back(trim_ws(cur));
    return parts;
}

inline Vec parse_vec(const std::string& key, const std::string& v, std::size_t dim) {
    const auto parts = split_commas(v);
    if (parts.size() != dim)
        throw Error("config: '" + key + "' expects " + std::to_string(dim) + " comma-separated numbers");
    Vec out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = parse_real(key, parts[i]);
    return out;
}

}  // namespace detail

/// Parse a flat `key = value` config (`#` comments). `dim` is applied
/// first so the remaining keys override the matching dimension defaults.
inline SimConfig parse_config(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> kv;
    std::istringstream is{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        const std::string t = detail::trim_ws(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        kv.emplace_back(detail::trim_ws(t.substr(0, eq)), detail::trim_ws(t.substr(eq + 1)));
    }
    std::size_t dim = 2;
    for (const auto& [k, v] : kv)
        if (k == "dim") dim = static_cast<std::size_t>(detail::parse_uint(k, v));
    if (dim != 2 && dim != 3) throw Error("config: dim must be 2 or 3");
    SimConfig c = default_config(dim);
    auto& d = c.disturbance;
    for (const auto& [k, v] : kv) {
        if (k == "dim") continue;
        else if (k == "n_boundary") c.n_boundary = detail::parse_uint(k, v);
        else if (k == "n_interior") c.n_interior = detail::parse_uint(k, v);
        else if (k == "robot_radius") c.robot_radius = detail::parse_real(k, v);
        else if (k == "robot_mass") c.robot_mass = detail::parse_real(k, v);
        else if (k == "grain_radius") c.grain_radius = detail::parse_real(k, v);
        else if (k == "grain_mass") c.grain_mass = detail::parse_real(k, v);
        else if (k == "friction") c.friction = detail::parse_real(k, v);
        else if (k == "spring_stiffness") c.spring_stiffness = detail::parse_real(k, v);
        else if (k == "alpha") c.alpha = detail::parse_real(k, v);
        else if (k == "mode") {
            if (v == "squared") c.mode = ControlMode::squared;
            else if (v == "paper") c.mode = ControlMode::paper_literal;
            else throw Error("config: mode must be 'paper' or 'squared'");
        }
        else if (k == "contact_stiffness") c.contact_stiffness = detail::parse_real(k, v);
        else if (k == "contact_damping") c.contact_damping = detail::parse_real(k, v);
        else if (k == "tangential_damping") c.tangential_damping = detail::parse_real(k, v);
        else if (k == "drag") c.drag = detail::parse_real(k, v);
        else if (k == "dt") c.dt = detail::parse_real(k, v);
        else if (k == "duration") c.duration = detail::parse_real(k, v);
        else if (k == "sample_every") c.sample_every = detail::parse_real(k, v);
        else if (k == "seed") c.seed = detail::parse_uint(k, v);
        else if (k == "start_radius") c.start_radius = detail::parse_real(k, v);
        else if (k == "start_center") c.start_center = detail::parse_vec(k, v, dim);
        else if (k == "target") c.target = detail::parse_vec(k, v, dim);
        else if (k == "membrane_contact") c.membrane_contact = detail::parse_bool(k, v);
        else if (k == "membrane_3d") c.membrane_3d = detail::parse_bool(k, v);
        else if (k == "disturb_start") d.start = detail::parse_real(k, v);
        else if (k == "disturb_end") d.end = detail::parse_real(k, v);
        else if (k == "disturb_count") d.count = static_cast<int>(detail::parse_uint(k, v));
        else if (k == "disturb_impulse") d.impulse = detail::parse_real(k, v);
        else if (k == "disturb_direction") {
            if (v == "random") d.random_direction = true;
            else {
                d.random_direction = false;
                d.direction = detail::parse_vec(k, v, dim);
            }
        }
        else if (k == "disturb_targets") {
            d.targets.clear();
            if (v != "boundary")
                for (const auto& p : detail::split_commas(v)) d.targets.push_back(detail::parse_uint(k, p));
        }
        else throw Error("config: unknown key '" + k + "'");
    }
    check_config(c);
    return c;
}

inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace rfield::sim
