#pragma once

#include <stdexcept>
#include <string>

namespace spatwhite {

// Base class for all library errors that are not argument-validation
// failures (those throw std::invalid_argument).
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// A linear-algebra operation failed (factorization, solve, inversion).
class numeric_failure : public error {
public:
    explicit numeric_failure(const std::string& what) : error(what) {}
};

// The cofactor vector of a row vanished; the row cannot be updated.
class degenerate_row_error : public numeric_failure {
public:
    explicit degenerate_row_error(const std::string& what) : numeric_failure(what) {}
};

// The Sherman-Morrison denominator is too small for a stable update.
class singular_update_error : public numeric_failure {
public:
    explicit singular_update_error(const std::string& what) : numeric_failure(what) {}
};

// A transform row sums to (near) zero, so the transformed variable
// carries no signal mean.
class mean_degenerate_error : public numeric_failure {
public:
    explicit mean_degenerate_error(const std::string& what) : numeric_failure(what) {}
};

// An eigenvector is (near) orthogonal to the all-ones vector; the PCA
// normalization is undefined for that component.
class degenerate_eigenvector_error : public numeric_failure {
public:
    explicit degenerate_eigenvector_error(const std::string& what) : numeric_failure(what) {}
};

// No sensor is active, so no estimate can be formed.
class undefined_estimate_error : public numeric_failure {
public:
    explicit undefined_estimate_error(const std::string& what) : numeric_failure(what) {}
};

// Every optimizer restart failed.
class optimization_failure : public error {
public:
    explicit optimization_failure(const std::string& what) : error(what) {}
};

}  // namespace spatwhite
