#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace otfs {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using Bits = std::vector<std::uint8_t>;

// A column of the system matrix is identically zero, so matched filtering
// against it is undefined.
class DegenerateColumnError : public std::domain_error {
public:
    explicit DegenerateColumnError(Eigen::Index column)
        : std::domain_error("column " + std::to_string(column) + " of the channel matrix is zero"),
          column_(column) {}
    Eigen::Index column() const noexcept { return column_; }

private:
    Eigen::Index column_;
};

class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite intermediate value inside an iterative detector.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(int iteration, Eigen::Index index)
        : std::runtime_error("non-finite value at iteration " + std::to_string(iteration) +
                             ", index " + std::to_string(index)),
          iteration_(iteration), index_(index) {}
    int iteration() const noexcept { return iteration_; }
    Eigen::Index index() const noexcept { return index_; }

private:
    int iteration_;
    Eigen::Index index_;
};

class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace otfs
