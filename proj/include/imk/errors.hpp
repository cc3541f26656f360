#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace imk {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Iterative solver failed; carries the residual history for diagnostics.
struct NoConvergence : std::runtime_error {
    NoConvergence(const std::string& what, std::vector<double> history = {})
        : std::runtime_error(what), residuals(std::move(history)) {}
    std::vector<double> residuals;
};

/// Spectral splitting could not be resolved at the requested tolerance.
struct DegenerateSplitting : std::runtime_error {
    DegenerateSplitting(const std::string& what, double suggested)
        : std::runtime_error(what), suggested_tol(suggested) {}
    double suggested_tol;
};

struct OutOfChart : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepSizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Divergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace imk
