/**
 * @file errors.hpp
 * @brief Exception hierarchy shared by all modules.
 *
 * Every failure raised by the library derives from miga::Error so the CLI can
 * map it to an exit status with a single catch site.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace miga {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (parameter out of range, k > p, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input that is valid in general but not handled by this implementation.
class UnsupportedInputError : public Error {
public:
    using Error::Error;
};

/// Violated construction-time invariant of a value type.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Geometric map with non-positive Jacobian determinant.
class SingularMapError : public Error {
public:
    using Error::Error;
};

/// Newton point inversion did not converge.
class InversionError : public Error {
public:
    using Error::Error;
};

/// Inconsistent scenario or problem setup (bad references, conflicting boundary data, ...).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Deformation gradient with det F <= 0 at a quadrature point.
class ElementInversionError : public Error {
public:
    ElementInversionError(const std::string& what, long element)
        : Error(what), element_(element) {}
    [[nodiscard]] long element() const noexcept { return element_; }

private:
    long element_;
};

/// Fiber centerline point that cannot be located inside the host patch.
class EmbeddingError : public Error {
public:
    EmbeddingError(const std::string& what, double arclength)
        : Error(what), arclength_(arclength) {}
    [[nodiscard]] double arclength() const noexcept { return arclength_; }

private:
    double arclength_;
};

/// Linear solve or factorization failure (singular saddle point systems end here).
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// Nonlinear iteration failed to converge or diverged.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace miga
