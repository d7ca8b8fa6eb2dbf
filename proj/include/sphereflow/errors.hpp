#pragma once

#include <stdexcept>
#include <string>

namespace sphereflow {

// Input file could not be parsed (point files, forcing CSVs, checkpoints).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// A derivative order beyond the smoothness budget of a kernel family was
// requested (analytically unbounded near the kernel diagonal).
class UnsupportedDerivativeError : public std::domain_error {
public:
    explicit UnsupportedDerivativeError(const std::string& what)
        : std::domain_error(what) {}
};

// Requested harmonic degree above the implemented table bound.
class UnsupportedDegreeError : public std::domain_error {
public:
    explicit UnsupportedDegreeError(const std::string& what)
        : std::domain_error(what) {}
};

// Cholesky breakdown; carries the first non-positive pivot.
class IllConditioningError : public std::runtime_error {
public:
    IllConditioningError(const std::string& what, int pivot)
        : std::runtime_error(what + " (pivot index " + std::to_string(pivot) + ")"),
          pivot_index(pivot) {}
    int pivot_index;
};

// An operation was invoked out of order (missing factorization, stale cache).
class StateError : public std::logic_error {
public:
    explicit StateError(const std::string& what) : std::logic_error(what) {}
};

// Solution left the finite range during time integration.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(const std::string& what, double time)
        : std::runtime_error(what + " at t=" + std::to_string(time)), t(time) {}
    double t;
};

} // namespace sphereflow
