#include "circspline/arc.hpp"

#include "circspline/errors.hpp"

namespace circspline {

Arc Arc::from_to(double a, double b) {
    const double s = wrap_angle(a);
    double len = wrap_angle(b - s);
    if (len == 0.0) len = kTwoPi;
    return {s, len};
}

Arc Arc::centered(double center, double half_width) {
    if (!(half_width > 0.0)) throw DomainError("Arc::centered: half width must be > 0");
    if (half_width >= kPi) return {wrap_angle(center - kPi), kTwoPi};
    return {wrap_angle(center - half_width), 2.0 * half_width};
}

}  // namespace circspline
