#pragma once

#include <stdexcept>
#include <string>

namespace mld {

// Randomization balance cannot be achieved for the requested layout.
class ParityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The treatment direction of an information matrix is (numerically) singular.
class NonEstimable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Contamination intensity sits on the pole of a closed form (q = 1).
class DegenerateContamination : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SingularCovariance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Layout or assignment arguments outside the supported domain of an operation.
class UnsupportedLayout : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Students cannot be spread evenly over teachers under the requested policy.
class DivisibilityError : public UnsupportedLayout {
public:
    using UnsupportedLayout::UnsupportedLayout;
};

}  // namespace mld
