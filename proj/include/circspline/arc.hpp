#pragma once

#include "circspline/circle_core.hpp"

namespace circspline {

/// Counterclockwise arc [start, start + length), start in [0, 2pi), length in (0, 2pi].
struct Arc {
    double start = 0.0;
    double length = kTwoPi;

    static Arc from_to(double a, double b);
    static Arc centered(double center, double half_width);

    double end() const { return wrap_angle(start + length); }
    double midpoint() const { return wrap_angle(start + 0.5 * length); }
    /// Offset of x from start along the arc, in [0, 2pi).
    double offset(double x) const { return wrap_angle(x - start); }
    bool contains(double x) const { return offset(x) < length; }
    bool operator==(const Arc&) const = default;
};

}  // namespace circspline
