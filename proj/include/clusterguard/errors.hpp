#pragma once

#include <stdexcept>
#include <string>

namespace clusterguard {

// Bad input: shape mismatch, invalid partition, unparseable file, bad flag value.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Solver hit the iteration limit; carries the last residuals.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double primal, double kkt, int iterations)
        : std::runtime_error(what), primal_residual(primal), kkt_residual(kkt), iterations(iterations) {}

    double primal_residual;
    double kkt_residual;
    int iterations;
};

// A certificate quantity was requested where its conditions do not apply
// (condition C1 violated, coincident centroids).
class CertificateError : public std::runtime_error {
public:
    explicit CertificateError(const std::string& what) : std::runtime_error(what) {}
};

// Internal consistency failure (the exact oracle found no KKT-certified candidate).
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace clusterguard
