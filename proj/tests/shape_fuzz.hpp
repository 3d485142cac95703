#pragma once

// Random .shape programs for property tests: valid sources built from the
// grammar, and mutations of them that are usually invalid.

#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rfield/shapelang.hpp"

namespace fuzz {

class ShapeGen {
  public:
    explicit ShapeGen(std::uint64_t seed) : rng_(seed) {}

    std::string program() {
        names_.clear();
        dim_ = coin(0.7) ? 2 : 3;
        std::string src;
        if (coin(0.2)) src += "# generated\n";
        const int defs = uniform_int(1, 6);
        for (int i = 0; i < defs; ++i) {
            const std::string name = "s" + std::to_string(i) + (coin(0.3) ? "_x" : "");
            src += name + " = " + expr(uniform_int(0, 3)) + ";" + (coin(0.1) ? "  # note" : "") + "\n";
            names_.push_back(name);
        }
        if (coin(0.3)) {
            src += "morph(initial=" + pick() + ", final=" + pick() + ", p=" + positive();
            if (coin(0.5)) src += ", s=" + fmt(unit());
            if (coin(0.3)) src += ", t_start=" + coord();
            src += ");\n";
        } else {
            src += "field = " + (coin(0.5) ? pick() : expr(2)) + (coin(0.1) ? "" : ";") + "\n";
        }
        return src;
    }

    /// Valid program text mutated by one random edit.
    std::string mutate(const std::string& src) {
        std::string s = src;
        static const std::string junk = "()=,;#@$!{}0.-e+x\"\\\n abc";
        const int kind = uniform_int(0, 5);
        if (s.empty()) return "@";
        const auto at = static_cast<std::size_t>(uniform_int(0, static_cast<int>(s.size()) - 1));
        switch (kind) {
            case 0: s.erase(at, 1); break;
            case 1: s.insert(at, 1, junk[static_cast<std::size_t>(uniform_int(0, static_cast<int>(junk.size()) - 1))]); break;
            case 2: s[at] = junk[static_cast<std::size_t>(uniform_int(0, static_cast<int>(junk.size()) - 1))]; break;
            case 3: s.resize(at); break;
            case 4: {
                static const char* swaps[] = {"r=-1", "m=0", "s=2", "p=0", "n=(0, 0)", "undefined_name", "circle(",
                                              "requiv(m=2.5, a)", "1e999", "segment(p1=(0, 0), p2=(0, 0))"};
                s.insert(at, swaps[uniform_int(0, 9)]);
                break;
            }
            default: {
                const auto b = static_cast<std::size_t>(uniform_int(0, static_cast<int>(s.size()) - 1));
                std::swap(s[at], s[b]);
            }
        }
        return s;
    }

    std::mt19937_64& rng() { return rng_; }

  private:
    bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

    static std::string fmt(double v) { return rfield::shapelang::format_number(v); }

    /// A coordinate: short decimals, full-precision doubles and exponents.
    std::string coord() {
        switch (uniform_int(0, 3)) {
            case 0: return fmt(uniform_int(-20, 20) / 10.0);
            case 1: return fmt(std::uniform_real_distribution<double>(-2.0, 2.0)(rng_));
            case 2: return fmt(std::ldexp(std::uniform_real_distribution<double>(-1.0, 1.0)(rng_), uniform_int(-30, 3)));
            default: {
                // hand-written forms the printer never produces
                const int mant = uniform_int(-999, 999);
                return std::to_string(mant) + "e-" + std::to_string(uniform_int(1, 4));
            }
        }
    }

    std::string positive() {
        switch (uniform_int(0, 2)) {
            case 0: return fmt(uniform_int(1, 30) / 10.0);
            case 1: return fmt(std::uniform_real_distribution<double>(1e-3, 3.0)(rng_));
            default: return std::to_string(uniform_int(1, 9)) + "E-" + std::to_string(uniform_int(0, 3));
        }
    }

    std::string point() {
        std::string s = "(" + coord() + ", " + coord();
        if (dim_ == 3) s += ", " + coord();
        return s + ")";
    }

    std::string normal() {
        std::vector<double> n(dim_);
        double len = 0.0;
        while (len < 1e-3) {
            len = 0.0;
            for (auto& v : n) {
                v = std::normal_distribution<double>(0.0, 1.0)(rng_);
                len += v * v;
            }
            len = std::sqrt(len);
        }
        // half the time exactly unit length, otherwise left for the parser
        const bool scale = coin(0.5);
        std::string s = "(";
        for (std::size_t i = 0; i < n.size(); ++i) s += (i ? ", " : "") + fmt(scale ? n[i] / len : n[i]);
        return s + ")";
    }

    static bool same_point(const std::string& a, const std::string& b) {
        // compare numerically: "0" and "0e-2" are the same coordinate
        auto values = [](const std::string& t) {
            std::vector<double> v;
            const char* p = t.c_str() + 1;
            char* end = nullptr;
            while (*p != '\0') {
                v.push_back(std::strtod(p, &end));
                p = end;
                while (*p == ',' || *p == ' ' || *p == ')') ++p;
            }
            return v;
        };
        return values(a) == values(b);
    }

    std::string pick() { return names_[static_cast<std::size_t>(uniform_int(0, static_cast<int>(names_.size()) - 1))]; }

    std::string leaf() {
        if (dim_ == 2) {
            switch (uniform_int(0, 2)) {
                case 0: return "circle(c=" + point() + ", r=" + positive() + ")";
                case 1: {
                    std::string a = point(), b = point();
                    while (same_point(a, b)) b = point();
                    return "segment(p1=" + a + ", p2=" + b + ")";
                }
                default: return "halfplane(o=" + point() + ", n=" + normal() + ")";
            }
        }
        if (coin(0.5)) {
            std::string s = "sphere(c=" + point() + ", r=" + positive();
            if (coin(0.5)) s += std::string(", normalized=") + (coin(0.5) ? "true" : "false");
            return s + ")";
        }
        return "plane(o=" + point() + ", n=" + normal() + ")";
    }

    std::string operand(int depth) {
        if (!names_.empty() && coin(0.3)) return pick();
        return expr(depth - 1);
    }

    std::string expr(int depth) {
        if (depth <= 0) return leaf();
        switch (uniform_int(0, 5)) {
            case 0: return leaf();
            case 1: return "neg(" + operand(depth) + ")";
            case 2:
            case 3: {
                std::string s = std::string(coin(0.5) ? "union(" : "inter(") + operand(depth) + ", " + operand(depth);
                if (coin(0.5)) s += ", s=" + fmt(coin(0.3) ? 1.0 : unit());
                return s + ")";
            }
            case 4: {
                std::string s = "requiv(m=" + std::to_string(uniform_int(1, 6));
                const int n = uniform_int(2, 4);
                for (int i = 0; i < n; ++i) s += ", " + operand(depth);
                return s + ")";
            }
            default: return "trim(" + operand(depth) + ", " + operand(depth) + ")";
        }
    }

    std::mt19937_64 rng_;
    std::size_t dim_ = 2;
    std::vector<std::string> names_;
};

/// (line, column) lies inside `src`, or is the 1:1 fallback for empty input.
inline bool position_inside(const std::string& src, int line, int column) {
    if (src.empty()) return line == 1 && column == 1;
    int l = 1;
    std::size_t start = 0;
    while (l < line) {
        const auto nl = src.find('\n', start);
        if (nl == std::string::npos) return false;
        start = nl + 1;
        ++l;
    }
    if (line < 1 || column < 1) return false;
    const auto end = src.find('\n', start);
    const std::size_t len = (end == std::string::npos ? src.size() : end + 1) - start;
    return static_cast<std::size_t>(column) <= std::max<std::size_t>(len, 1);
}

}  // namespace fuzz
