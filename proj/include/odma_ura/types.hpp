#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace odma_ura {

using Complex = std::complex<double>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using CRowVector = Eigen::Matrix<Complex, 1, Eigen::Dynamic>;
using RVector = Eigen::VectorXd;

// One bit per element, values 0/1.
using Bits = std::vector<std::uint8_t>;

// Raised when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a regularised Gram solve cannot be factorised.
class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}

    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

inline void require(bool cond, const std::string& message) {
    if (!cond) {
        throw InvalidArgument(message);
    }
}

}  // namespace odma_ura
