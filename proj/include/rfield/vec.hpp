#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>

namespace rfield {

/// Small fixed-capacity vector with a runtime dimension of 2 or 3.
/// Used both for positions (meters) and for gradients / velocities.
class Vec {
  public:
    static constexpr std::size_t max_dim = 3;

    constexpr Vec() = default;
    constexpr explicit Vec(std::size_t dim) : dim_{dim} {}
    constexpr Vec(double x, double y) : c_{x, y, 0.0}, dim_{2} {}
    constexpr Vec(double x, double y, double z) : c_{x, y, z}, dim_{3} {}

    static Vec zero(std::size_t dim) { return Vec(dim); }

    [[nodiscard]] constexpr std::size_t dim() const noexcept { return dim_; }
    constexpr double& operator[](std::size_t i) noexcept { return c_[i]; }
    constexpr double operator[](std::size_t i) const noexcept { return c_[i]; }

    [[nodiscard]] constexpr const double* begin() const noexcept { return c_.data(); }
    [[nodiscard]] constexpr const double* end() const noexcept { return c_.data() + dim_; }

    constexpr Vec& operator+=(const Vec& o) noexcept {
        for (std::size_t i = 0; i < dim_; ++i) c_[i] += o.c_[i];
        return *this;
    }
    constexpr Vec& operator-=(const Vec& o) noexcept {
        for (std::size_t i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    constexpr Vec& operator*=(double s) noexcept {
        for (std::size_t i = 0; i < dim_; ++i) c_[i] *= s;
        return *this;
    }

    friend constexpr Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
    friend constexpr Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
    friend constexpr Vec operator*(Vec a, double s) noexcept { return a *= s; }
    friend constexpr Vec operator*(double s, Vec a) noexcept { return a *= s; }
    friend constexpr Vec operator-(Vec a) noexcept { return a *= -1.0; }

    friend constexpr bool operator==(const Vec& a, const Vec& b) noexcept {
        if (a.dim_ != b.dim_) return false;
        for (std::size_t i = 0; i < a.dim_; ++i)
            if (a.c_[i] != b.c_[i]) return false;
        return true;
    }

  private:
    std::array<double, max_dim> c_{};
    std::size_t dim_ = 0;
};

/// A position in meters.
using Point = Vec;

inline double dot(const Vec& a, const Vec& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_sq(const Vec& a) noexcept { return dot(a, a); }
inline double norm(const Vec& a) noexcept { return std::sqrt(norm_sq(a)); }

inline double max_abs(const Vec& a) noexcept {
    double m = 0.0;
    for (double v : a) m = std::fmax(m, std::fabs(v));
    return m;
}

inline bool all_finite(const Vec& a) noexcept {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace rfield
