#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kinetik {

// d-vector with d in {2,3}; fixed max size keeps it off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

constexpr double kPi = std::numbers::pi;

enum class ErrorKind { validation, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Precondition or input error (bad config, v' = v, r <= 0, ...).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

// Quadrature / solver budget failure.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

Vec make_vec(std::initializer_list<double> xs);
Vec zero_vec(int d);

// Surface measure of the unit sphere S^{d-1} in R^d.
double sphere_measure(int d);
// Volume of the unit ball in R^d.
double ball_volume(int d);

// Warnings go to a process-wide sink (stderr by default).
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& msg);

}  // namespace kinetik
