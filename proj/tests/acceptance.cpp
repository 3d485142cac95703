// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "rfield/rfield.hpp"
#include "shape_fuzz.hpp"

using namespace rfield;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string src(const std::string& rel) { return (fs::path(RFIELD_SOURCE_DIR) / rel).string(); }

shapelang::ShapeProgram load_shape(const std::string& rel) { return shapelang::parse(io::read_file(src(rel))); }

Vec unit_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(dim);
    double len = 0.0;
    while (len < 1e-6) {
        for (std::size_t i = 0; i < dim; ++i) v[i] = n(rng);
        len = norm(v);
    }
    return v * (1.0 / len);
}

/// Any unit vector orthogonal to n (2-D or 3-D).
Vec tangent(const Vec& n, std::mt19937_64& rng) {
    if (n.dim() == 2) return Vec{-n[1], n[0]};
    Vec v = unit_vector(rng, 3);
    v = v - n * dot(v, n);
    return v * (1.0 / norm(v));
}

/// Primitive boundary samples: (field, point on the zero set).
struct BoundarySample {
    FieldExpr field;
    Point x;
};

std::vector<BoundarySample> primitive_boundaries(const std::string& kind, std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> uc(-2.0, 2.0), ur(0.05, 2.0), ul(0.05, 0.95);
    std::vector<BoundarySample> out;
    for (int k = 0; k < n; ++k) {
        if (kind == "circle") {
            const Point c{uc(rng), uc(rng)};
            const double r = ur(rng);
            const Vec u = unit_vector(rng, 2);
            out.push_back({circle(c, r), c + u * r});
        } else if (kind == "sphere") {
            const Point c{uc(rng), uc(rng), uc(rng)};
            const double r = ur(rng);
            const Vec u = unit_vector(rng, 3);
            out.push_back({sphere(c, r), c + u * r});
        } else if (kind == "plane" || kind == "halfplane") {
            const std::size_t d = kind == "plane" ? 3 : 2;
            Point o(d);
            for (std::size_t i = 0; i < d; ++i) o[i] = uc(rng);
            const Vec nrm = unit_vector(rng, d);
            out.push_back({plane(o, nrm), o + tangent(nrm, rng) * uc(rng)});
        } else {
            const Point a{uc(rng), uc(rng)};
            Point b{uc(rng), uc(rng)};
            while (norm(b - a) < 0.1) b = Point{uc(rng), uc(rng)};
            out.push_back({segment(a, b), a + (b - a) * ul(rng)});
        }
    }
    return out;
}

const char* const primitive_kinds[] = {"circle", "segment", "halfplane", "plane", "sphere"};

// ---------------------------------------------------------------------------

void criterion_1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    bool ok = true;
    std::string detail;
    for (const char* kind : primitive_kinds) {
        const double tol = std::string(kind) == "segment" ? 1e-9 : 1e-12;
        double worst = 0.0;
        for (const auto& s : primitive_boundaries(kind, rng, 200)) worst = std::max(worst, std::fabs(eval(s.field, s.x)));
        ok = ok && worst < tol;
        detail += std::string(kind) + " max|phi| " + fmt("%.2e", worst) + "; ";
    }
    const double wall = seconds_since(t0);
    ok = ok && wall < 1.0;
    report(1, ok, "primitive zero sets: " + detail + fmt("%.3f s", wall));
}

void criterion_2() {
    std::mt19937_64 rng(202);
    bool ok = true;
    double worst = 0.0;
    for (const char* kind : primitive_kinds)
        for (const auto& s : primitive_boundaries(kind, rng, 200))
            worst = std::max(worst, std::fabs(norm(gradient(s.field, s.x).grad) - 1.0));
    ok = worst <= 1e-9;

    // two disjoint segments joined by R-equivalence, m = 2
    struct Pair {
        Point a1, a2, b1, b2;
    };
    const std::vector<Pair> pairs{
        {Point{-0.5, -0.25}, Point{0.5, -0.25}, Point{-0.5, 0.25}, Point{0.5, 0.25}},
        {Point{-0.6, -0.3}, Point{0.4, -0.1}, Point{-0.2, 0.5}, Point{0.6, 0.2}},
        {Point{-1.0, 0.0}, Point{-0.2, 0.0}, Point{0.2, 0.0}, Point{1.0, 0.0}},
    };
    double lo = 1.0, hi = 1.0;
    for (const auto& p : pairs) {
        const auto e = equivalence(2, {segment(p.a1, p.a2), segment(p.b1, p.b2)});
        for (int k = 0; k <= 200; ++k) {
            const double lam = 0.1 + 0.8 * k / 200.0;
            for (const Point& x : {p.a1 + (p.a2 - p.a1) * lam, p.b1 + (p.b2 - p.b1) * lam}) {
                const double g = norm(gradient(e, x).grad);
                lo = std::min(lo, g);
                hi = std::max(hi, g);
            }
        }
    }
    ok = ok && lo >= 0.999 && hi <= 1.001;
    report(2, ok,
           "unit gradient: primitives max||grad|-1| " + fmt("%.2e", worst) + "; segment equivalence |grad| in [" +
               fmt("%.6f", lo) + ", " + fmt("%.6f", hi) + "]");
}

double relative_gradient_error(const std::function<double(const Point&)>& f, const Vec& g, const Point& x) {
    std::vector<double> xs(x.begin(), x.end());
    const auto fd = oracle::central_diff(
        [&](const std::vector<double>& v) {
            Point p(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i];
            return f(p);
        },
        xs, 1e-5);
    double diff = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) diff += (g[i] - fd[i]) * (g[i] - fd[i]);
    return std::sqrt(diff) / std::max(norm(g), 1e-3);
}

void criterion_3() {
    const auto t0 = Clock::now();
    struct Case {
        std::string name;
        TimeField field;
        bool random_t;
    };
    auto c = circle(Point{0.1, -0.1}, 0.6);
    auto s = segment(Point{-0.5, -0.2}, Point{0.4, 0.3});
    auto h = plane(Point{0.0, 0.1}, Vec{0.6, 0.8});
    auto c2 = circle(Point{-0.3, 0.2}, 0.5);
    const auto capsule = load_shape("shapes/capsule_morph.shape");
    const auto pacman = load_shape("shapes/pacman.shape");
    std::vector<Case> cases{
        {"circle", c, false},
        {"segment", s, false},
        {"halfplane", h, false},
        {"sphere", sphere(Point{0.1, 0.0, -0.1}, 0.5), false},
        {"plane", plane(Point{0.0, 0.0, 0.2}, Vec{0.0, 0.6, 0.8}), false},
        {"neg", negate(c), false},
        {"union", disjunction(c, c2, 0.3), false},
        {"inter", conjunction(c, h, 0.0), false},
        {"requiv", equivalence(3, {s, c, segment(Point{0.6, -0.6}, Point{0.7, 0.5})}), false},
        {"trim", trimmed(c, h), false},
        {"pacman", *pacman.field, false},
        {"morph", shapelang::compile(capsule), true},
    };
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> u(-1.2, 1.2), ut(0.0, 15.0);
    double worst = 0.0;
    std::string worst_name;
    for (const auto& cs : cases) {
        const std::size_t d = cs.field.dimension();
        int done = 0;
        while (done < 100) {
            Point x(d);
            for (std::size_t i = 0; i < d; ++i) x[i] = u(rng);
            const double t = cs.random_t ? ut(rng) : 0.0;
            // smooth points only: off the zero set, where trimmed carriers fold
            if (std::fabs(cs.field.eval(x, t)) < 1e-3) continue;
            const auto g = cs.field.gradient(x, t);
            const double err =
                relative_gradient_error([&](const Point& p) { return cs.field.eval(p, t); }, g.grad, x);
            if (err > worst) {
                worst = err;
                worst_name = cs.name;
            }
            ++done;
        }
    }
    const double wall = seconds_since(t0);
    report(3, worst < 1e-6 && wall < 5.0,
           "forward mode vs central differences: max rel error " + fmt("%.2e", worst) + " (" + worst_name + ") over " +
               std::to_string(cases.size()) + " node types x 100 points; " + fmt("%.3f s", wall));
}

void criterion_4() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(1e-3, 10.0);
    double worst = 0.0;
    for (int m : {1, 2, 3, 4}) {
        for (int k = 0; k < 10000; ++k) {
            const double a = u(rng), b = u(rng), c = u(rng);
            const double p[3] = {a, b, c};
            const double n = r_equivalence_n(std::span<const double>(p, 3), m);
            const double orders[] = {
                r_equivalence_pair(r_equivalence_pair(a, b, m), c, m),
                r_equivalence_pair(a, r_equivalence_pair(b, c, m), m),
                r_equivalence_pair(r_equivalence_pair(a, c, m), b, m),
            };
            for (double v : orders) worst = std::max(worst, std::fabs(v - n));
        }
    }
    // disjunction is not associative
    const double a = 1.0, b = 2.0, c = -3.0;
    const double left = r_disjunction(r_disjunction(a, b), c);
    const double right = r_disjunction(a, r_disjunction(b, c));
    const double witness = std::fabs(left - right);
    report(4, worst < 1e-12 && witness > 1e-6,
           "equivalence nestings vs n-ary: max diff " + fmt("%.2e", worst) +
               " over 4e4 triples; disjunction non-associativity witness " + fmt("%.4f", witness));
}

/// Zero set of a field that is star-shaped about the origin, by bisection along rays.
std::vector<Point> zero_set_by_rays(const FieldExpr& f, int n) {
    std::vector<Point> out;
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * (k + 0.5) / n;
        const Vec dir{std::cos(a), std::sin(a)};
        double lo = 0.0, hi = 3.0;
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            (eval(f, Point{0.0, 0.0} + dir * mid) > 0.0 ? lo : hi) = mid;
        }
        out.push_back(Point{0.0, 0.0} + dir * lo);
    }
    return out;
}

void criterion_5() {
    const auto prog = load_shape("shapes/capsule_morph.shape");
    const auto sched = *shapelang::morph_schedule(prog);

    double start_err = 0.0;
    for (const Point& x : zero_set_by_rays(sched.initial, 200))
        start_err = std::max(start_err, std::fabs(eval_morph(sched, x, 0.0)));

    // smallest sampled time with f(t) >= 1 - 1e-12
    double t_hi = 1.0;
    while (ramp(t_hi, sched.p) < 1.0 - 1e-12) t_hi *= 2.0;
    double t_lo = 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (t_lo + t_hi);
        (ramp(mid, sched.p) >= 1.0 - 1e-12 ? t_hi : t_lo) = mid;
    }
    const double t_end = sched.t_start + t_hi;
    double end_err = 0.0, blend_err = 0.0;
    for (const Point& x : zero_set_by_rays(sched.target, 200)) {
        end_err = std::max(end_err, std::fabs(eval_morph(sched, x, t_end)));
        // the interpolation itself, without the completed-morph shortcut
        const auto w = blend_weights(x, t_end, sched);
        blend_err = std::max(blend_err, std::fabs(w.w1 * eval(sched.initial, x) + w.w2 * eval(sched.target, x)));
    }

    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(-1.5, 1.5), ut(0.0, 80.0);
    int inexact = 0;
    for (int k = 0; k < 10000; ++k) {
        const auto w = blend_weights(Point{u(rng), u(rng)}, ut(rng), sched);
        if (w.w1 + w.w2 != 1.0) ++inexact;
    }
    report(5, start_err < 1e-9 && end_err < 1e-6 && blend_err < 1e-6 && inexact == 0,
           "morph endpoints: t=0 max|phi| " + fmt("%.2e", start_err) + "; t=" + fmt("%.2f", t_end) + " max|phi| " +
               fmt("%.2e", end_err) + " (blend " + fmt("%.2e", blend_err) + "); w1+w2 != 1 at " +
               std::to_string(inexact) + " of 1e4 samples");
}

struct RunResult {
    sim::Trajectory traj;
    double wall = 0.0;
};

RunResult simulate(const std::string& shape, const std::string& config) {
    const auto cfg = sim::load_config(src(config));
    const TimeField field = shapelang::compile(load_shape(shape));
    const auto t0 = Clock::now();
    RunResult r;
    r.traj = sim::run(cfg, field);
    r.wall = seconds_since(t0);
    return r;
}

double error_at(const sim::Trajectory& t, double time) {
    // last sample at or before `time`
    double e = t.samples.front().shape_error;
    for (const auto& s : t.samples) {
        if (s.time > time + 1e-9) break;
        e = s.shape_error;
    }
    return e;
}

const double criterion_6_threshold = 0.015;

std::string circle_run_bytes;

void criterion_6() {
    const auto r = simulate("shapes/circle.shape", "configs/default.cfg");
    double reached = -1.0;
    for (const auto& s : r.traj.samples) {
        if (s.shape_error < criterion_6_threshold) {
            reached = s.time;
            break;
        }
    }
    circle_run_bytes = io::export_trajectory(r.traj, true);
    const bool ok = reached >= 0.0 && reached <= 60.0 && r.wall < 300.0;
    report(6, ok,
           "circle formation: shape_error < 0.015 m at t = " + (reached >= 0.0 ? fmt("%.1f s", reached) : "never") +
               ", final " + fmt("%.4f m", r.traj.samples.back().shape_error) + "; wall " + fmt("%.1f s", r.wall));
}

void criterion_7() {
    const auto cfg = sim::load_config(src("configs/disturbance.cfg"));
    const auto r = simulate("shapes/pacman.shape", "configs/disturbance.cfg");
    const double before = error_at(r.traj, cfg.disturbance.start);
    const double limit = 1.5 * before;
    const double window_end = cfg.disturbance.end;
    double peak = 0.0, recovered = -1.0;
    for (const auto& s : r.traj.samples) {
        if (s.time >= cfg.disturbance.start && s.time <= window_end) peak = std::max(peak, s.shape_error);
        if (s.time >= window_end && s.time <= window_end + 20.0 && s.shape_error <= limit && recovered < 0.0)
            recovered = s.time;
    }
    report(7, recovered >= 0.0,
           "disturbance recovery: pre " + fmt("%.4f m", before) + ", peak in window " + fmt("%.4f m", peak) +
               ", back under 1.5x at t = " + (recovered >= 0.0 ? fmt("%.1f s", recovered) : "never") +
               "; final " + fmt("%.4f m", r.traj.samples.back().shape_error));
}

void criterion_8() {
    const auto r = simulate("shapes/capsule_morph.shape", "configs/morph.cfg");
    const double final_err = r.traj.samples.back().shape_error;
    report(8, final_err <= criterion_6_threshold && r.traj.degenerate_blends == 0,
           "circle to capsule morph: final shape_error " + fmt("%.4f m", final_err) + ", degenerate blends " +
               std::to_string(r.traj.degenerate_blends) + "; wall " + fmt("%.1f s", r.wall));
}

void criterion_9() {
    const auto r = simulate("shapes/cube.shape", "configs/cube3d.cfg");
    const auto cfg = sim::load_config(src("configs/cube3d.cfg"));
    // steady state: mean over the last 5 s of samples
    double sum = 0.0;
    int n = 0;
    for (const auto& s : r.traj.samples) {
        if (s.time < cfg.duration - 5.0) continue;
        sum += s.shape_error;
        ++n;
    }
    const double steady = n ? sum / n : 1.0;
    report(9, cfg.n_boundary == 162 && steady < 0.01 && r.wall < 120.0,
           "3-D cube, " + std::to_string(cfg.n_boundary) + " agents: steady mean |phi| " + fmt("%.2e m", steady) +
               "; wall " + fmt("%.1f s", r.wall));
}

void criterion_10() {
    const auto r = simulate("shapes/circle.shape", "configs/default.cfg");
    const std::string again = io::export_trajectory(r.traj, true);
    const auto dir = fs::temp_directory_path() / "rfield_acceptance";
    fs::create_directories(dir);
    io::write_file((dir / "first.csv").string(), circle_run_bytes);
    io::write_file((dir / "second.csv").string(), again);
    const bool same = io::read_file((dir / "first.csv").string()) == io::read_file((dir / "second.csv").string());
    fs::remove_all(dir);
    report(10, same && !again.empty(),
           std::string("determinism: repeated circle run ") + (same ? "byte-identical" : "differs") + " (" +
               std::to_string(again.size()) + " bytes)");
}

void criterion_11() {
    int shipped = 0, shipped_ok = 0;
    for (const auto& e : fs::directory_iterator(src("shapes"))) {
        if (e.path().extension() != ".shape") continue;
        ++shipped;
        try {
            const auto prog = shapelang::parse(io::read_file(e.path().string()));
            const std::string text = shapelang::serialize(prog);
            const auto again = shapelang::parse(text);
            if (again == prog && shapelang::serialize(again) == text) ++shipped_ok;
        } catch (const std::exception&) {
        }
    }

    fuzz::ShapeGen gen(1111);
    int fuzz_ok = 0;
    for (int k = 0; k < 1000; ++k) {
        try {
            const auto prog = shapelang::parse(gen.program());
            const std::string text = shapelang::serialize(prog);
            const auto again = shapelang::parse(text);
            if (again == prog && shapelang::serialize(again) == text) ++fuzz_ok;
        } catch (const std::exception&) {
        }
    }

    int invalid = 0, positioned = 0, crashes = 0;
    for (int k = 0; k < 5000; ++k) {
        const std::string text = gen.mutate(gen.program());
        try {
            (void)shapelang::parse(text);
        } catch (const shapelang::ParseError& e) {
            ++invalid;
            positioned += fuzz::position_inside(text, e.line(), e.column());
        } catch (const shapelang::SemanticError& e) {
            ++invalid;
            positioned += fuzz::position_inside(text, e.line(), e.column());
        } catch (...) {
            ++crashes;
        }
    }
    report(11, shipped > 0 && shipped_ok == shipped && fuzz_ok == 1000 && positioned == invalid && crashes == 0,
           "parser: shipped " + std::to_string(shipped_ok) + "/" + std::to_string(shipped) + ", fuzz round trips " +
               std::to_string(fuzz_ok) + "/1000, invalid mutants with positions " + std::to_string(positioned) + "/" +
               std::to_string(invalid) + ", other exceptions " + std::to_string(crashes));
}

template <class F>
void guarded(int id, F f) {
    try {
        f();
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

}  // namespace

int main() {
    guarded(1, criterion_1);
    guarded(2, criterion_2);
    guarded(3, criterion_3);
    guarded(4, criterion_4);
    guarded(5, criterion_5);
    guarded(6, criterion_6);
    guarded(7, criterion_7);
    guarded(8, criterion_8);
    guarded(9, criterion_9);
    guarded(10, criterion_10);
    guarded(11, criterion_11);
    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
