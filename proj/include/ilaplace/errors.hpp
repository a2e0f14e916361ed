#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ilaplace {

// Base for all library failures.  A failure raised inside one coordinate's
// re-normalization task gets annotated with that coordinate before it is
// rethrown to the caller.
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg)
        : std::runtime_error(""), base_(std::move(msg)), full_(base_) {}

    const char* what() const noexcept override { return full_.c_str(); }

    void set_coordinate(int q) {
        coordinate_ = q;
        full_ = base_ + " (coordinate " + std::to_string(q) + ")";
    }
    int coordinate() const { return coordinate_; }  // -1 if unset

private:
    std::string base_;
    std::string full_;
    int coordinate_ = -1;
};

namespace detail {
inline std::string point_to_string(const Eigen::VectorXd& x) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(x[i]);
    }
    return s + "]";
}
}  // namespace detail

class NonFiniteObjective : public Error {
public:
    explicit NonFiniteObjective(Eigen::VectorXd x)
        : Error("objective evaluated to a non-finite value at x = " +
                detail::point_to_string(x)),
          point(std::move(x)) {}
    Eigen::VectorXd point;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class HessianNotPD : public Error {
public:
    explicit HessianNotPD(std::string where) : Error("Hessian block not positive definite " + std::move(where)) {}
    HessianNotPD(std::string where, Eigen::VectorXd x)
        : Error("Hessian block not positive definite " + std::move(where) +
                " at x = " + detail::point_to_string(x)),
          point(std::move(x)) {}
    Eigen::VectorXd point;
};

class UnboundedProfile : public Error {
public:
    using Error::Error;
};

class ToleranceNotMet : public Error {
public:
    using Error::Error;
};

class BudgetExhausted : public Error {
public:
    using Error::Error;
};

class DimensionTooLarge : public Error {
public:
    using Error::Error;
};

class UnknownModel : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

}  // namespace ilaplace
