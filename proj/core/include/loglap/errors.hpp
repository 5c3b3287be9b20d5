#pragma once

#include <stdexcept>
#include <string>

namespace loglap {

// argument outside the mathematical domain of a formula
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// malformed call: wrong sizes, too few samples, bad schedule
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// parameter regime where the problem has no solution to compute
class RegimeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double last_residual)
        : std::runtime_error(what), residual_(last_residual) {}

    double last_residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace loglap
