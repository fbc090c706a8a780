#pragma once

#include <stdexcept>
#include <string>

namespace pcsc {

// Caller passed structurally wrong arguments (shape mismatch, bad axes).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Input data violates a declared invariant (negative mass, sum off).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested exhaustive computation exceeds the enumeration budget.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& msg, double required, double budget)
        : std::runtime_error(msg), required_cells(required), budget_cells(budget) {}
    double required_cells;
    double budget_cells;
};

// Iterative solver stopped without reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, double gap)
        : std::runtime_error(msg), final_gap(gap) {}
    double final_gap;
};

}  // namespace pcsc
