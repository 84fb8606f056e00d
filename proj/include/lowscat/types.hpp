#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lowscat {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VecX<double>;
using Mat = MatX<double>;

// Radius below which nothing is modelled.
inline constexpr double r_min = 1.0;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: r < 1, malformed config, out-of-range parameter.
class DomainError : public Error {
public:
    using Error::Error;
};

// Quadrature, root finder or integrator failed to meet tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

class AdmissibilityError : public DomainError {
public:
    using DomainError::DomainError;
};

class ConeError : public DomainError {
public:
    using DomainError::DomainError;
};

class NoTurningPoint : public DomainError {
public:
    using DomainError::DomainError;
};

class CoreEntryError : public Error {
public:
    using Error::Error;
};

class HardyViolation : public Error {
public:
    using Error::Error;
};

class CutoffActive : public Error {
public:
    using Error::Error;
};

class NonContraction : public Error {
public:
    using Error::Error;
};

class NoMatch : public Error {
public:
    using Error::Error;
};

}  // namespace lowscat
