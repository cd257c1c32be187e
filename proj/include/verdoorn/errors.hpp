#pragma once

#include <stdexcept>
#include <string>

namespace verdoorn {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input: missing columns, unparseable rows, empty streams.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Structurally inconsistent data: duplicate keys, coverage gaps,
/// regions without coordinates.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Value outside the mathematical domain of an operation
/// (non-positive level in a log growth rate, constant variate, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid caller-supplied parameter (permutation count, grid point, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Estimation failure: singular design, too few observations,
/// optimizer breakdown.
class EstimationError : public Error {
public:
    using Error::Error;
};

/// Robust LM denominator collapsed (D <= T). Carries the raw quantities
/// so the caller can report or fall back.
class DiagnosticDegeneracyError : public Error {
public:
    DiagnosticDegeneracyError(const std::string& msg, double d_rho, double d_lambda,
                              double trace_term, double denom)
        : Error(msg), d_rho(d_rho), d_lambda(d_lambda), trace_term(trace_term), denom(denom) {}

    double d_rho;
    double d_lambda;
    double trace_term;  // T = tr(W'W + WW)
    double denom;       // D = (WXb)'M(WXb)/sigma2 + T
};

}  // namespace verdoorn
