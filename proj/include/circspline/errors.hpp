#pragma once

#include <stdexcept>
#include <string>

namespace circspline {

// Input outside an operation's domain (negative lambda, empty sample, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Moments that are not power sums of points on the unit circle.
class InconsistentMoments : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure inside an estimation stage; message carries the stage label.
class EstimationError : public std::runtime_error {
public:
    EstimationError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Malformed input files (bad lines, overlapping bins, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace circspline
