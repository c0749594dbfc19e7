#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace circspline {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using cplx = std::complex<double>;

/// Reduce a finite real modulo 2pi into [0, 2pi). Throws DomainError on NaN/inf.
double wrap_angle(double raw);

/// Signed displacement b - a mapped into [-pi, pi).
double signed_displacement(double a, double b);

/// min(|a - b|, 2pi - |a - b|) for wrapped inputs.
double circular_distance(double a, double b);

class Angle {
public:
    Angle() = default;
    explicit Angle(double raw) : value_(wrap_angle(raw)) {}

    double radians() const { return value_; }
    Angle operator+(double d) const { return Angle(value_ + d); }
    Angle operator-(double d) const { return Angle(value_ - d); }
    friend bool operator==(const Angle&, const Angle&) = default;

private:
    double value_ = 0.0;
};

/// A multiset of observations on the circle, stored wrapped into [0, 2pi).
class AngularSample {
public:
    AngularSample() = default;
    explicit AngularSample(std::span<const double> raw);
    explicit AngularSample(std::vector<double> raw);

    std::size_t size() const { return angles_.size(); }
    bool empty() const { return angles_.empty(); }
    const std::vector<double>& angles() const { return angles_; }
    double operator[](std::size_t i) const { return angles_[i]; }

    /// Angles sorted ascending (copy).
    std::vector<double> sorted() const;

private:
    std::vector<double> angles_;
};

/// Complex moments u_k for k = -K..K. Only k >= 0 is stored; u_{-k} = conj(u_k).
class FourierCoefficients {
public:
    FourierCoefficients() : coeffs_(1, cplx(1.0, 0.0)) {}
    explicit FourierCoefficients(int max_order);
    explicit FourierCoefficients(std::vector<cplx> nonnegative);

    int max_order() const { return static_cast<int>(coeffs_.size()) - 1; }
    cplx operator()(int k) const;
    void set(int k, cplx value);

    /// x_k = Re u_k, y_k = Im u_k.
    double x(int k) const { return (*this)(k).real(); }
    double y(int k) const { return (*this)(k).imag(); }

    const std::vector<cplx>& nonnegative() const { return coeffs_; }

private:
    std::vector<cplx> coeffs_;
};

/// u_k = (1/n) sum_j exp(i k theta_j), k = 0..K.
FourierCoefficients empirical_fourier(const AngularSample& sample, int max_order);

/// Weighted power-sum means (1/n) sum_j w_j exp(i k theta_j) for k >= 1; u_0 is left at 1.
FourierCoefficients weighted_fourier(const AngularSample& sample, std::span<const double> weights,
                                     int max_order);

/// Recover the n points (n <= 8) whose power sums are n * moments(k), k = 1..n.
/// Roots are found from the companion matrix of the polynomial built by Newton's identities.
AngularSample data_from_moments(const FourierCoefficients& moments, int n);

}  // namespace circspline
