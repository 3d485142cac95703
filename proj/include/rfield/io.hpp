#pragma once

// Grid sampling and the text export formats (CSV, legacy VTK structured
// points, trajectory CSV, state snapshot CSV). The byte layout of each
// writer is fixed; tests/golden holds reference files.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rfield/errors.hpp"
#include "rfield/morph.hpp"
#include "rfield/sim.hpp"
#include "rfield/tolerances.hpp"
#include "rfield/vec.hpp"

namespace rfield::io {

struct GridSpec {
    Point origin{0.0, 0.0};
    double spacing = 0.01;
    std::vector<std::size_t> dims{1, 1};  ///< nodes per axis, x first

    [[nodiscard]] std::size_t dim() const noexcept { return dims.size(); }
    [[nodiscard]] std::size_t size() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

inline void check_grid(const GridSpec& g, double cap = default_tolerances.grid_sample_cap) {
    if (g.dims.size() != 2 && g.dims.size() != 3) throw DimensionError("grid must be 2-D or 3-D");
    if (g.origin.dim() != g.dims.size()) throw DimensionError("grid origin dimension differs from dims");
    if (!(g.spacing > 0.0) || !std::isfinite(g.spacing)) throw Error("grid spacing must be positive");
    double total = 1.0;
    for (auto d : g.dims) {
        if (d == 0) throw Error("grid dims must be positive");
        total *= static_cast<double>(d);
    }
    if (total > cap) {
        throw Error("grid has " + std::to_string(static_cast<long long>(total)) + " samples, cap is " +
                    std::to_string(static_cast<long long>(cap)));
    }
}

/// Position of node `n`; x varies fastest, then y, then z.
inline Point grid_point(const GridSpec& g, std::size_t n) {
    Point p(g.dim());
    for (std::size_t a = 0; a < g.dim(); ++a) {
        const std::size_t idx = n % g.dims[a];
        n /= g.dims[a];
        p[a] = g.origin[a] + g.spacing * static_cast<double>(idx);
    }
    return p;
}

struct GridSamples {
    std::vector<double> phi;
    std::optional<std::vector<double>> gradmag;
};

/// phi (and optionally |grad phi|) at every node; morphs are frozen at t.
inline GridSamples sample_grid(const TimeField& field, const GridSpec& grid, double t = 0.0,
                               bool with_gradmag = false, double cap = default_tolerances.grid_sample_cap) {
    check_grid(grid, cap);
    if (field.dimension() != grid.dim()) throw DimensionError("field and grid dimensions differ");
    GridSamples out;
    const std::size_t n = grid.size();
    out.phi.resize(n);
    if (with_gradmag) out.gradmag.emplace(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Point p = grid_point(grid, k);
        if (with_gradmag) {
            const GradientSample g = field.gradient(p, t);
            out.phi[k] = g.value;
            (*out.gradmag)[k] = norm(g.grad);
        } else {
            out.phi[k] = field.eval(p, t);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Number formatting

/// 17 significant digits: always enough to read back the identical double.
inline std::string format_17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw IoError("malformed number '" + std::string(s) + "'");
    return v;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t b = 0;
    while (true) {
        const auto e = s.find(sep, b);
        out.push_back(s.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
        if (e == std::string_view::npos) break;
        b = e + 1;
    }
    return out;
}

inline std::vector<std::string_view> lines(std::string_view s) {
    auto ls = split(s, '\n');
    if (!ls.empty() && ls.back().empty()) ls.pop_back();
    return ls;
}

inline const char* axis_name(std::size_t a) { return a == 0 ? "x" : (a == 1 ? "y" : "z"); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Grid export

enum class GridFormat { csv, vtk };

inline std::string export_grid(const GridSamples& s, const GridSpec& grid, GridFormat format) {
    check_grid(grid, std::numeric_limits<double>::infinity());
    const std::size_t n = grid.size();
    if (s.phi.size() != n || (s.gradmag && s.gradmag->size() != n))
        throw Error("sample count " + std::to_string(s.phi.size()) + " does not match grid size " + std::to_string(n));
    std::string out;
    if (format == GridFormat::csv) {
        for (std::size_t a = 0; a < grid.dim(); ++a) out += std::string(a ? "," : "") + detail::axis_name(a);
        out += ",phi";
        if (s.gradmag) out += ",gradmag";
        out += '\n';
        for (std::size_t k = 0; k < n; ++k) {
            const Point p = grid_point(grid, k);
            for (std::size_t a = 0; a < grid.dim(); ++a) out += (a ? "," : "") + format_17(p[a]);
            out += "," + format_17(s.phi[k]);
            if (s.gradmag) out += "," + format_17((*s.gradmag)[k]);
            out += '\n';
        }
        return out;
    }
    const std::size_t nz = grid.dim() == 3 ? grid.dims[2] : 1;
    const double oz = grid.dim() == 3 ? grid.origin[2] : 0.0;
    out += "# vtk DataFile Version 3.0\n";
    out += "rfield approximate distance field\n";
    out += "ASCII\n";
    out += "DATASET STRUCTURED_POINTS\n";
    out += "DIMENSIONS " + std::to_string(grid.dims[0]) + " " + std::to_string(grid.dims[1]) + " " +
           std::to_string(nz) + "\n";
    out += "ORIGIN " + format_17(grid.origin[0]) + " " + format_17(grid.origin[1]) + " " + format_17(oz) + "\n";
    out += "SPACING " + format_17(grid.spacing) + " " + format_17(grid.spacing) + " " + format_17(grid.spacing) + "\n";
    out += "POINT_DATA " + std::to_string(n) + "\n";
    auto scalars = [&](const char* name, const std::vector<double>& v) {
        out += std::string("SCALARS ") + name + " double 1\n";
        out += "LOOKUP_TABLE default\n";
        for (double x : v) out += format_17(x) + "\n";
    };
    scalars("phi", s.phi);
    if (s.gradmag) scalars("gradmag", *s.gradmag);
    return out;
}

/// Parsed grid CSV: node coordinates plus the value columns.
struct GridCsv {
    std::size_t dim = 2;
    std::vector<Point> points;
    std::vector<double> phi;
    std::optional<std::vector<double>> gradmag;
};

inline GridCsv parse_grid_csv(std::string_view text) {
    const auto ls = detail::lines(text);
    if (ls.empty()) throw IoError("empty grid csv");
    GridCsv out;
    const auto head = detail::split(ls[0], ',');
    if (head == std::vector<std::string_view>{"x", "y", "phi"}) {
        out.dim = 2;
    } else if (head == std::vector<std::string_view>{"x", "y", "phi", "gradmag"}) {
        out.dim = 2;
        out.gradmag.emplace();
    } else if (head == std::vector<std::string_view>{"x", "y", "z", "phi"}) {
        out.dim = 3;
    } else if (head == std::vector<std::string_view>{"x", "y", "z", "phi", "gradmag"}) {
        out.dim = 3;
        out.gradmag.emplace();
    } else {
        throw IoError("unrecognized grid csv header '" + std::string(ls[0]) + "'");
    }
    for (std::size_t r = 1; r < ls.size(); ++r) {
        const auto cells = detail::split(ls[r], ',');
        if (cells.size() != head.size()) throw IoError("grid csv row " + std::to_string(r) + " has wrong arity");
        Point p(out.dim);
        for (std::size_t a = 0; a < out.dim; ++a) p[a] = parse_double(cells[a]);
        out.points.push_back(p);
        out.phi.push_back(parse_double(cells[out.dim]));
        if (out.gradmag) out.gradmag->push_back(parse_double(cells[out.dim + 1]));
    }
    return out;
}

/// Header fields and the first scalar block of a legacy VTK file.
struct VtkGrid {
    std::size_t dims[3] = {0, 0, 0};
    double origin[3] = {0, 0, 0};
    double spacing[3] = {0, 0, 0};
    std::size_t point_data = 0;
    std::vector<double> phi;
};

inline VtkGrid parse_vtk(std::string_view text) {
    const auto ls = detail::lines(text);
    if (ls.size() < 10 || ls[0] != "# vtk DataFile Version 3.0" || ls[2] != "ASCII" ||
        ls[3] != "DATASET STRUCTURED_POINTS")
        throw IoError("not a legacy ASCII structured-points file");
    VtkGrid g;
    auto fields = [&](std::string_view line, std::string_view key) {
        auto parts = detail::split(line, ' ');
        if (parts.empty() || parts[0] != key) throw IoError("expected " + std::string(key));
        parts.erase(parts.begin());
        return parts;
    };
    auto d = fields(ls[4], "DIMENSIONS");
    auto o = fields(ls[5], "ORIGIN");
    auto s = fields(ls[6], "SPACING");
    if (d.size() != 3 || o.size() != 3 || s.size() != 3) throw IoError("bad VTK header");
    for (int a = 0; a < 3; ++a) {
        g.dims[a] = static_cast<std::size_t>(parse_double(d[a]));
        g.origin[a] = parse_double(o[a]);
        g.spacing[a] = parse_double(s[a]);
    }
    g.point_data = static_cast<std::size_t>(parse_double(fields(ls[7], "POINT_DATA").at(0)));
    if (ls.size() < 10 + g.point_data) throw IoError("VTK file truncated");
    for (std::size_t k = 0; k < g.point_data; ++k) g.phi.push_back(parse_double(ls[10 + k]));
    return g;
}

// ---------------------------------------------------------------------------
// Trajectories

inline std::string export_trajectory(const sim::Trajectory& traj, bool with_positions = false) {
    const std::size_t dim = traj.dim;
    std::string out = "t";
    for (std::size_t a = 0; a < dim; ++a) out += std::string(",com_") + detail::axis_name(a);
    out += ",shape_error,target_distance";
    const std::size_t nb = traj.samples.empty() ? 0 : traj.samples.front().positions.size();
    if (with_positions)
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t a = 0; a < dim; ++a) out += ",b" + std::to_string(b) + "_" + detail::axis_name(a);
    out += '\n';
    for (const auto& s : traj.samples) {
        out += format_17(s.time);
        for (std::size_t a = 0; a < dim; ++a) out += "," + format_17(s.com[a]);
        out += "," + format_17(s.shape_error) + "," + format_17(s.target_distance);
        if (with_positions)
            for (const auto& p : s.positions)
                for (std::size_t a = 0; a < dim; ++a) out += "," + format_17(p[a]);
        out += '\n';
    }
    return out;
}

/// Metric columns of a trajectory CSV (positions, if present, are skipped).
inline sim::Trajectory parse_trajectory_csv(std::string_view text) {
    const auto ls = detail::lines(text);
    if (ls.empty()) throw IoError("empty trajectory csv");
    const auto head = detail::split(ls[0], ',');
    sim::Trajectory t;
    if (head.size() >= 6 && head[3] == "com_z") t.dim = 3;
    else if (head.size() >= 5 && head[2] == "com_y") t.dim = 2;
    else throw IoError("unrecognized trajectory header");
    if (head[0] != "t" || head[t.dim + 1] != "shape_error" || head[t.dim + 2] != "target_distance")
        throw IoError("unrecognized trajectory header");
    for (std::size_t r = 1; r < ls.size(); ++r) {
        const auto c = detail::split(ls[r], ',');
        if (c.size() != head.size()) throw IoError("trajectory row " + std::to_string(r) + " has wrong arity");
        sim::Sample s;
        s.time = parse_double(c[0]);
        s.com = Point(t.dim);
        for (std::size_t a = 0; a < t.dim; ++a) s.com[a] = parse_double(c[1 + a]);
        s.shape_error = parse_double(c[t.dim + 1]);
        s.target_distance = parse_double(c[t.dim + 2]);
        t.samples.push_back(std::move(s));
    }
    return t;
}

/// One row per body: index, kind, position, velocity, radius, mass.
inline std::string export_state(const sim::WorldState& w) {
    std::string out = "index,kind";
    for (std::size_t a = 0; a < w.dim; ++a) out += std::string(",") + detail::axis_name(a);
    for (std::size_t a = 0; a < w.dim; ++a) out += std::string(",v") + detail::axis_name(a);
    out += ",radius,mass\n";
    for (std::size_t i = 0; i < w.bodies.size(); ++i) {
        const auto& b = w.bodies[i];
        out += std::to_string(i) + (b.kind == sim::BodyKind::boundary_robot ? ",robot" : ",grain");
        for (std::size_t a = 0; a < w.dim; ++a) out += "," + format_17(b.position[a]);
        for (std::size_t a = 0; a < w.dim; ++a) out += "," + format_17(b.velocity[a]);
        out += "," + format_17(b.radius) + "," + format_17(b.mass) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace rfield::io
