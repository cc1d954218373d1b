#pragma once

#include <stdexcept>
#include <string>

namespace greenprec {

// Invalid configuration value; carries the offending field name.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Non-finite iterate in the splitting solver.
class SolverDiverged : public std::runtime_error {
public:
    explicit SolverDiverged(int iteration)
        : std::runtime_error("splitting solver diverged at iteration " + std::to_string(iteration)),
          iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

// A precoder could not produce a usable transmit vector for one symbol.
class PrecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace greenprec
