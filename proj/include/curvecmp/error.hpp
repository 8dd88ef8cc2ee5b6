#pragma once

#include <stdexcept>
#include <string>

namespace curvecmp {

/// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an information matrix cannot be inverted.
class SingularDesign : public std::runtime_error {
public:
    SingularDesign(int group, const std::string& what)
        : std::runtime_error(what), group_(group) {}

    /// 1 or 2; 0 when the matrix is not tied to a group.
    int group() const noexcept { return group_; }

private:
    int group_;
};

/// Iterative procedure failed to converge.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace curvecmp
