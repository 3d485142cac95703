#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rfield {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

/// A primitive whose parameters make it undefined (zero-length segment,
/// non-unit plane normal, non-positive radius, ...).
class DegenerateError : public Error {
  public:
    using Error::Error;
};

/// g1 + g2 vanished while blending two fields.
class DegenerateBlendError : public Error {
  public:
    DegenerateBlendError(const std::string& what, double t) : Error(what), time_{t} {}
    [[nodiscard]] double time() const noexcept { return time_; }

  private:
    double time_;
};

/// Non-recoverable simulator failure (non-finite state, packing failure).
class SimulationError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Non-fatal finding reported by validation or by clamping arithmetic.
struct Diagnostic {
    enum class Kind {
        dimension_mismatch,
        degenerate_segment,
        nonpositive_radius,
        nonunit_normal,
        negative_s,
        s_above_one,
        radicand_clamped,
        bad_m,
        too_few_children,
        negative_time,
        nonfinite_parameter,
    };
    Kind kind;
    std::string message;
};

using Diagnostics = std::vector<Diagnostic>;

inline const char* to_string(Diagnostic::Kind k) {
    switch (k) {
        case Diagnostic::Kind::dimension_mismatch: return "dimension-mismatch";
        case Diagnostic::Kind::degenerate_segment: return "degenerate-segment";
        case Diagnostic::Kind::nonpositive_radius: return "nonpositive-radius";
        case Diagnostic::Kind::nonunit_normal: return "nonunit-normal";
        case Diagnostic::Kind::negative_s: return "negative-s";
        case Diagnostic::Kind::s_above_one: return "s-above-one";
        case Diagnostic::Kind::radicand_clamped: return "radicand-clamped";
        case Diagnostic::Kind::bad_m: return "bad-m";
        case Diagnostic::Kind::too_few_children: return "too-few-children";
        case Diagnostic::Kind::negative_time: return "negative-time";
        case Diagnostic::Kind::nonfinite_parameter: return "nonfinite-parameter";
    }
    return "unknown";
}

}  // namespace rfield
