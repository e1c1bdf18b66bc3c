#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nmuon {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NonFiniteValue : public Error {
public:
    using Error::Error;
};

// A Cholesky pivot was <= 0. Callers usually respond by increasing the ridge.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(std::size_t pivot_index, double pivot_value)
        : Error("matrix is not positive definite: pivot " + std::to_string(pivot_index) +
                " = " + std::to_string(pivot_value)),
          pivot_index_(pivot_index),
          pivot_value_(pivot_value) {}

    std::size_t pivot_index() const noexcept { return pivot_index_; }
    double pivot_value() const noexcept { return pivot_value_; }

private:
    std::size_t pivot_index_;
    double pivot_value_;
};

class NotPSD : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

class ZeroMatrix : public Error {
public:
    using Error::Error;
};

class MarginTooSmall : public Error {
public:
    MarginTooSmall(double margin, double required)
        : Error("scaled ridge margin " + std::to_string(margin) +
                " is below the plan epsilon " + std::to_string(required)),
          margin_(margin),
          required_(required) {}

    double margin() const noexcept { return margin_; }
    double required() const noexcept { return required_; }

private:
    double margin_;
    double required_;
};

class PlanViolation : public Error {
public:
    PlanViolation(double bound, double s_out)
        : Error("plan certificate violated: chained bound " + std::to_string(bound) +
                " exceeds s_out " + std::to_string(s_out)),
          bound_(bound),
          s_out_(s_out) {}

    double bound() const noexcept { return bound_; }
    double s_out() const noexcept { return s_out_; }

private:
    double bound_;
    double s_out_;
};

class DecompositionViolated : public Error {
public:
    DecompositionViolated(std::size_t step, double residual)
        : Error("iterate left the invariant subspace at step " + std::to_string(step) +
                " (off-basis residual " + std::to_string(residual) + ")"),
          step_(step),
          residual_(residual) {}

    std::size_t step() const noexcept { return step_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t step_;
    double residual_;
};

class DegenerateDirection : public Error {
public:
    using Error::Error;
};

class FixedPointDiverged : public Error {
public:
    FixedPointDiverged(double x, std::size_t iterations)
        : Error("Stieltjes fixed point did not converge at x = " + std::to_string(x) +
                " after " + std::to_string(iterations) + " iterations"),
          x_(x) {}

    double x() const noexcept { return x_; }

private:
    double x_;
};

class SizeCapExceeded : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class Diverged : public Error {
public:
    using Error::Error;
};

}  // namespace nmuon
