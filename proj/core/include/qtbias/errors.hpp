// errors.hpp — exception hierarchy shared by all qtbias modules.

#pragma once

#include <stdexcept>
#include <string>

namespace qtbias {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// herm_eig rejected a matrix whose anti-Hermitian part is above tolerance.
struct NonHermitianError : Error {
    double defect;
    explicit NonHermitianError(double d)
        : Error("matrix is not Hermitian (defect " + std::to_string(d) + ")"), defect(d) {}
};

// psd_sqrt found an eigenvalue below the clamping window.
struct IndefiniteMatrixError : Error {
    double eigenvalue;
    explicit IndefiniteMatrixError(double ev)
        : Error("matrix is not positive semidefinite (eigenvalue " + std::to_string(ev) + ")"),
          eigenvalue(ev) {}
};

// psd_inverse found an eigenvalue below the invertibility threshold.
struct SingularMatrixError : Error {
    double eigenvalue;
    explicit SingularMatrixError(double ev)
        : Error("matrix is numerically singular (eigenvalue " + std::to_string(ev) + ")"),
          eigenvalue(ev) {}
};

// apply_channel rejected an input that is not a valid density matrix.
struct DensityMatrixError : Error {
    double defect;
    DensityMatrixError(const std::string& what, double d)
        : Error("invalid density matrix: " + what + " (defect " + std::to_string(d) + ")"),
          defect(d) {}
};

// The biased-map recursion hit a normalizer with min eigenvalue < 1e-12 at
// the named collision step: the requested bias is not realizable as a
// trace-preserving map at these parameters.
struct DegenerateScheduleError : Error {
    int step;
    double eigenvalue;
    DegenerateScheduleError(int n, double ev)
        : Error("degenerate bias schedule at collision " + std::to_string(n) +
                " (min eigenvalue " + std::to_string(ev) + ")"),
          step(n), eigenvalue(ev) {}
};

// A Born-rule branch probability left [0, 1] beyond rounding slack.
struct NumericalDegradationError : Error {
    double value;
    explicit NumericalDegradationError(double p)
        : Error("branch probability outside [0,1]: " + std::to_string(p)), value(p) {}
};

// Central finite difference hit a zero-probability point at omega +/- delta.
struct UndefinedDerivativeError : Error {
    UndefinedDerivativeError()
        : Error("log-probability is -inf at a shifted frequency; derivative undefined") {}
};

// Integrator step-size precondition violated.
struct StepSizeError : Error {
    using Error::Error;
};

// Exhaustive enumeration requested above the configured cap.
struct EnumerationCapError : Error {
    int n;
    int cap;
    EnumerationCapError(int n_, int cap_)
        : Error("enumeration over " + std::to_string(n_) + " collisions exceeds cap " +
                std::to_string(cap_)),
          n(n_), cap(cap_) {}
};

// Data-collapse measure: no pair of sets overlaps in rescaled x.
struct NoOverlapError : Error {
    NoOverlapError() : Error("no overlapping region between any pair of sets") {}
};

// Data-collapse measure: every candidate point was excluded by the
// denominator guard.
struct EmptyMeasureError : Error {
    EmptyMeasureError() : Error("all points excluded by the denominator guard") {}
};

// Configuration schema violation; `path` names the offending field.
struct ConfigError : Error {
    std::string path;
    ConfigError(std::string p, const std::string& what)
        : Error(p + ": " + what), path(std::move(p)) {}
};

}  // namespace qtbias
