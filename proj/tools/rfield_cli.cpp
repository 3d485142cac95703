// rfield: compile shapes, sample fields on grids, verify gradients and run
// the granular robot simulator.
//
// Exit codes: 0 ok, 1 parse error, 2 semantic error, 3 I/O error,
// 4 check failed, 5 simulation diverged.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rfield/rfield.hpp"

namespace fs = std::filesystem;
using namespace rfield;

namespace {

enum Exit : int { ok = 0, parse_failed = 1, semantic = 2, io_failed = 3, check_failed = 4, diverged = 5 };

struct CliFailure {
    int code;
    std::string message;
};

shapelang::ShapeProgram load_shape(const std::string& path) {
    std::string src;
    try {
        src = io::read_file(path);
    } catch (const IoError& e) {
        throw CliFailure{io_failed, e.what()};
    }
    try {
        return shapelang::parse(src);
    } catch (const shapelang::ParseError& e) {
        throw CliFailure{parse_failed, path + ": parse error at " + e.what()};
    } catch (const shapelang::SemanticError& e) {
        throw CliFailure{semantic, path + ": semantic error at " + e.what()};
    }
}

/// --grid ox,oy[,oz]:spacing:nx,ny[,nz]
io::GridSpec parse_grid_flag(const std::string& flag) {
    const auto parts = io::detail::split(flag, ':');
    if (parts.size() != 3) throw CLI::ValidationError("--grid", "expected ox,oy[,oz]:spacing:nx,ny[,nz]");
    const auto o = io::detail::split(parts[0], ',');
    const auto n = io::detail::split(parts[2], ',');
    if (o.size() != n.size() || (o.size() != 2 && o.size() != 3))
        throw CLI::ValidationError("--grid", "origin and dims must both have 2 or 3 entries");
    io::GridSpec g;
    try {
        g.origin = Point(o.size());
        g.dims.clear();
        for (std::size_t a = 0; a < o.size(); ++a) {
            g.origin[a] = io::parse_double(o[a]);
            const double d = io::parse_double(n[a]);
            if (!(d >= 1.0) || d != std::floor(d)) throw IoError("dims must be positive integers");
            g.dims.push_back(static_cast<std::size_t>(d));
        }
        g.spacing = io::parse_double(parts[1]);
    } catch (const IoError& e) {
        throw CLI::ValidationError("--grid", e.what());
    }
    if (!(g.spacing > 0.0)) throw CLI::ValidationError("--grid", "spacing must be positive");
    return g;
}

io::GridFormat parse_format(const std::string& f) { return f == "vtk" ? io::GridFormat::vtk : io::GridFormat::csv; }

void write_or_fail(const std::string& path, const std::string& bytes) {
    try {
        io::write_file(path, bytes);
    } catch (const IoError& e) {
        throw CliFailure{io_failed, e.what()};
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliFailure{io_failed, "cannot create directory '" + dir.string() + "': " + ec.message()};
}

std::string time_tag(double t) { return shapelang::format_number(t); }

// ---------------------------------------------------------------------------

int cmd_grid(const std::string& shape, const std::string& grid_flag, const std::string& out, const std::string& fmt,
             bool gradmag, double t) {
    const auto prog = load_shape(shape);
    const TimeField field = shapelang::compile(prog);
    const io::GridSpec grid = parse_grid_flag(grid_flag);
    io::GridSamples s;
    try {
        s = io::sample_grid(field, grid, t, gradmag);
    } catch (const Error& e) {
        throw CliFailure{semantic, e.what()};
    }
    write_or_fail(out, io::export_grid(s, grid, parse_format(fmt)));
    const auto [lo, hi] = std::minmax_element(s.phi.begin(), s.phi.end());
    std::cout << "nodes " << s.phi.size() << "\n"
              << "phi_min " << io::format_17(*lo) << "\n"
              << "phi_max " << io::format_17(*hi) << "\n";
    return ok;
}

int cmd_check_grad(const std::string& shape, int samples, double tol, std::uint64_t seed, double lo, double hi,
                   double t, double h) {
    const auto prog = load_shape(shape);
    const TimeField field = shapelang::compile(prog);
    const std::size_t dim = field.dimension();
    std::uint64_t rng = seed;
    double worst = -1.0;
    Point worst_at(dim);
    Vec worst_ad(dim), worst_fd(dim);
    for (int k = 0; k < samples; ++k) {
        Point x(dim);
        for (std::size_t a = 0; a < dim; ++a) x[a] = lo + (hi - lo) * sim::next_uniform(rng);
        GradientSample g;
        Vec fd(dim);
        try {
            g = field.gradient(x, t);
            for (std::size_t a = 0; a < dim; ++a) {
                Point xp = x, xm = x;
                xp[a] += h;
                xm[a] -= h;
                fd[a] = (field.eval(xp, t) - field.eval(xm, t)) / (2.0 * h);
            }
        } catch (const DegenerateBlendError& e) {
            std::cerr << "skipping degenerate point: " << e.what() << "\n";
            continue;
        }
        const double rel = norm(g.grad - fd) / std::max(norm(g.grad), 1e-3);
        if (rel > worst) {
            worst = rel;
            worst_at = x;
            worst_ad = g.grad;
            worst_fd = fd;
        }
    }
    auto show = [](const Vec& v) {
        std::string s = "(";
        for (std::size_t a = 0; a < v.dim(); ++a) s += (a ? ", " : "") + io::format_17(v[a]);
        return s + ")";
    };
    std::cout << "samples " << samples << "\n"
              << "max_rel_error " << io::format_17(worst) << "\n"
              << "worst_point " << show(worst_at) << "\n"
              << "forward_mode " << show(worst_ad) << "\n"
              << "finite_diff " << show(worst_fd) << "\n";
    if (worst < tol) {
        std::cout << "PASS (tolerance " << io::format_17(tol) << ")\n";
        return ok;
    }
    std::cout << "FAIL (tolerance " << io::format_17(tol) << ")\n";
    return check_failed;
}

struct SimulateOptions {
    std::string manifest;
    std::string shape;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<double> duration;
    std::optional<double> dt;
    bool positions = false;
};

/// Fill unset options from a key = value manifest; paths are relative to it.
void apply_manifest(SimulateOptions& o) {
    if (o.manifest.empty()) return;
    std::string text;
    try {
        text = io::read_file(o.manifest);
    } catch (const IoError& e) {
        throw CliFailure{io_failed, e.what()};
    }
    const fs::path base = fs::path(o.manifest).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
    int lineno = 0;
    for (auto line : io::detail::lines(text)) {
        ++lineno;
        std::string l(line.substr(0, line.find('#')));
        const auto eq = l.find('=');
        const std::string key = sim::detail::trim_ws(l.substr(0, eq == std::string::npos ? l.size() : eq));
        if (key.empty()) continue;
        if (eq == std::string::npos)
            throw CliFailure{semantic, o.manifest + ":" + std::to_string(lineno) + ": expected key = value"};
        const std::string val = sim::detail::trim_ws(l.substr(eq + 1));
        try {
            if (key == "shape") { if (o.shape.empty()) o.shape = resolve(val); }
            else if (key == "config") { if (o.config.empty()) o.config = resolve(val); }
            else if (key == "out") { if (o.out.empty()) o.out = resolve(val); }
            else if (key == "seed") { if (!o.seed) o.seed = sim::detail::parse_uint(key, val); }
            else if (key == "mode") { if (!o.mode) o.mode = val; }
            else if (key == "duration") { if (!o.duration) o.duration = sim::detail::parse_real(key, val); }
            else if (key == "dt") { if (!o.dt) o.dt = sim::detail::parse_real(key, val); }
            else if (key == "positions") { o.positions = o.positions || sim::detail::parse_bool(key, val); }
            else throw Error("unknown manifest key '" + key + "'");
        } catch (const Error& e) {
            throw CliFailure{semantic, o.manifest + ": " + e.what()};
        }
    }
}

int cmd_simulate(SimulateOptions o) {
    apply_manifest(o);
    if (o.shape.empty()) throw CliFailure{semantic, "simulate: no shape file given (--shape or manifest)"};
    if (o.out.empty()) o.out = "run";
    const auto prog = load_shape(o.shape);
    const TimeField field = shapelang::compile(prog);

    sim::SimConfig cfg = sim::default_config(field.dimension());
    if (!o.config.empty()) {
        try {
            cfg = sim::load_config(o.config);
        } catch (const IoError& e) {
            throw CliFailure{io_failed, e.what()};
        } catch (const Error& e) {
            throw CliFailure{semantic, o.config + ": " + e.what()};
        }
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.duration) cfg.duration = *o.duration;
    if (o.dt) cfg.dt = *o.dt;
    if (o.mode) {
        if (*o.mode == "paper") cfg.mode = sim::ControlMode::paper_literal;
        else if (*o.mode == "squared") cfg.mode = sim::ControlMode::squared;
        else throw CliFailure{semantic, "--mode must be 'paper' or 'squared'"};
    }
    try {
        sim::check_config(cfg);
    } catch (const Error& e) {
        throw CliFailure{semantic, e.what()};
    }
    if (cfg.dim != field.dimension())
        throw CliFailure{semantic, "shape is " + std::to_string(field.dimension()) + "-D but config is " +
                                       std::to_string(cfg.dim) + "-D"};
    const double bound = sim::stability_bound(cfg);
    if (cfg.dt > bound) {
        std::cerr << "warning: dt = " << cfg.dt << " s exceeds the stability bound " << bound
                  << " s (0.2 sqrt(m_min / k_c)); attempting the run anyway\n";
    }

    ensure_dir(o.out);
    const auto t0 = std::chrono::steady_clock::now();
    sim::WorldState final_state;
    sim::Trajectory traj;
    try {
        traj = sim::run(cfg, field, &final_state);
    } catch (const SimulationError& e) {
        std::cerr << "simulation diverged: " << e.what() << "\n";
        return diverged;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path dir(o.out);
    write_or_fail((dir / "trajectory.csv").string(), io::export_trajectory(traj, o.positions));
    write_or_fail((dir / "final_state.csv").string(), io::export_state(final_state));
    const auto& last = traj.samples.back();
    std::string summary;
    summary += "final_time = " + io::format_17(last.time) + "\n";
    summary += "final_shape_error = " + io::format_17(last.shape_error) + "\n";
    summary += "final_target_distance = " + io::format_17(last.target_distance) + "\n";
    summary += "steps = " + std::to_string(traj.steps) + "\n";
    summary += "bodies = " + std::to_string(final_state.bodies.size()) + "\n";
    summary += "seed = " + std::to_string(cfg.seed) + "\n";
    summary += "degenerate_blends = " + std::to_string(traj.degenerate_blends) + "\n";
    summary += "wall_time_s = " + io::format_17(wall) + "\n";
    write_or_fail((dir / "summary.txt").string(), summary);
    std::cout << summary;
    return ok;
}

int cmd_morph_grid(const std::string& shape, const std::vector<double>& times, const std::string& grid_flag,
                   const std::string& out, const std::string& fmt, bool gradmag) {
    const auto prog = load_shape(shape);
    const auto sched = shapelang::morph_schedule(prog);
    if (!sched) throw CliFailure{semantic, shape + ": no morph export"};
    const io::GridSpec grid = parse_grid_flag(grid_flag);
    ensure_dir(out);
    const TimeField field(*sched);
    const std::string ext = fmt == "vtk" ? ".vtk" : ".csv";
    for (double t : times) {
        io::GridSamples s;
        try {
            s = io::sample_grid(field, grid, t, gradmag);
        } catch (const Error& e) {
            throw CliFailure{semantic, e.what()};
        }
        const std::string path = (fs::path(out) / ("phi_t" + time_tag(t) + ext)).string();
        write_or_fail(path, io::export_grid(s, grid, parse_format(fmt)));
        std::cout << path << "\n";
    }
    return ok;
}

int cmd_compile(const std::string& shape) {
    const auto prog = load_shape(shape);
    std::cout << shapelang::serialize(prog);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rfield: approximate distance fields, morphs and granular robot shape control"};
    app.require_subcommand(1);

    std::string shape, grid_flag = "-1,-1:0.02:101,101", out, fmt = "csv";
    bool gradmag = false;
    double t = 0.0;

    auto* grid = app.add_subcommand("grid", "sample a shape's field on a regular grid");
    grid->add_option("shape", shape, ".shape file")->required();
    grid->add_option("--grid", grid_flag, "ox,oy[,oz]:spacing:nx,ny[,nz]")->capture_default_str();
    grid->add_option("--out", out, "output file")->required();
    grid->add_option("--format", fmt, "csv or vtk")->check(CLI::IsMember({"csv", "vtk"}))->capture_default_str();
    grid->add_flag("--gradmag", gradmag, "also write |grad phi|");
    grid->add_option("--t", t, "time for morph exports (s)")->capture_default_str();

    int samples = 100;
    double tol = 1e-6, lo = -1.0, hi = 1.0, h = 1e-5;
    std::uint64_t seed = 1;
    auto* check = app.add_subcommand("check-grad", "compare forward-mode and finite-difference gradients");
    check->add_option("shape", shape, ".shape file")->required();
    check->add_option("--samples,-n", samples, "number of random points")->check(CLI::PositiveNumber)->capture_default_str();
    check->add_option("--tol", tol, "max relative error")->check(CLI::NonNegativeNumber)->capture_default_str();
    check->add_option("--seed", seed, "sampling seed")->capture_default_str();
    check->add_option("--lo", lo, "lower corner of the sampling box")->capture_default_str();
    check->add_option("--hi", hi, "upper corner of the sampling box")->capture_default_str();
    check->add_option("--t", t, "time for morph exports (s)")->capture_default_str();
    check->add_option("--step", h, "finite-difference step (m)")->check(CLI::PositiveNumber)->capture_default_str();

    SimulateOptions so;
    std::uint64_t sim_seed = 0;
    std::string sim_mode;
    double sim_duration = 0.0, sim_dt = 0.0;
    auto* simulate = app.add_subcommand("simulate", "run the granular robot simulator");
    simulate->add_option("manifest", so.manifest, "run manifest (key = value: shape, config, out, seed, ...)");
    simulate->add_option("--shape", so.shape, ".shape file");
    simulate->add_option("--config", so.config, "key = value simulator config");
    simulate->add_option("--out", so.out, "output directory, created if absent (default: run)");
    auto* seed_opt = simulate->add_option("--seed", sim_seed, "random seed (default: config, else 1)");
    auto* mode_opt = simulate->add_option("--mode", sim_mode, "paper or squared (default: config, else squared)")->check(CLI::IsMember({"paper", "squared"}));
    auto* dur_opt = simulate->add_option("--duration", sim_duration, "simulated seconds (default: config, else 60)")->check(CLI::NonNegativeNumber);
    auto* dt_opt = simulate->add_option("--dt", sim_dt, "time step in s (default: config, else 0.0004)")->check(CLI::PositiveNumber);
    simulate->add_flag("--positions", so.positions, "write per-body positions into trajectory.csv");

    std::string times_flag;
    auto* morph = app.add_subcommand("morph-grid", "sample a morph export at several times");
    morph->add_option("shape", shape, ".shape file with a morph export")->required();
    morph->add_option("--times", times_flag, "comma-separated times (s)")->required();
    morph->add_option("--grid", grid_flag, "ox,oy[,oz]:spacing:nx,ny[,nz]")->capture_default_str();
    morph->add_option("--out", out, "output directory")->required();
    morph->add_option("--format", fmt, "csv or vtk")->check(CLI::IsMember({"csv", "vtk"}))->capture_default_str();
    morph->add_flag("--gradmag", gradmag, "also write |grad phi|");

    auto* compile = app.add_subcommand("compile", "parse a shape and print its canonical form");
    compile->add_option("shape", shape, ".shape file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*grid) return cmd_grid(shape, grid_flag, out, fmt, gradmag, t);
        if (*check) return cmd_check_grad(shape, samples, tol, seed, lo, hi, t, h);
        if (*simulate) {
            if (*seed_opt) so.seed = sim_seed;
            if (*mode_opt) so.mode = sim_mode;
            if (*dur_opt) so.duration = sim_duration;
            if (*dt_opt) so.dt = sim_dt;
            return cmd_simulate(so);
        }
        if (*morph) {
            std::vector<double> times;
            for (auto part : io::detail::split(times_flag, ',')) {
                try {
                    times.push_back(io::parse_double(part));
                } catch (const IoError&) {
                    throw CLI::ValidationError("--times", "not a number: '" + std::string(part) + "'");
                }
            }
            return cmd_morph_grid(shape, times, grid_flag, out, fmt, gradmag);
        }
        if (*compile) return cmd_compile(shape);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const CliFailure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const SimulationError& e) {
        std::cerr << "simulation diverged: " << e.what() << "\n";
        return diverged;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io_failed;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return semantic;
    }
    return ok;
}
