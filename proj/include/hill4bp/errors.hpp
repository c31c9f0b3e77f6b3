#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hill4bp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter or argument outside the mathematically valid range.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Seed lies outside the admissible (energetically allowed) region.
class InadmissibleError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Evaluation at a collision point. `body()` names the offending mass.
class SingularityError : public Error {
public:
    explicit SingularityError(const std::string &body)
        : Error("collision singularity at " + body), body_(body)
    {
    }
    const std::string &body() const noexcept { return body_; }

private:
    std::string body_;
};

/// Iterative solver failed; carries the residual history.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string &what, std::vector<double> residuals = {})
        : Error(what), residuals_(std::move(residuals))
    {
    }
    const std::vector<double> &residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

/// Adaptive step size fell below the minimum.
class StiffnessError : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

/// Two routes that must agree did not (e.g. no sign change where one is required).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace hill4bp
