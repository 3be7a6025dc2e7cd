#pragma once

#include "pdmpfv/numerics.hpp"

namespace pdmpfv {

/// One-dimensional state space F = (lower, upper). The point `upper` belongs
/// to the forced-jump boundary. Computations run on the truncated interval
/// [truncation_lower, upper), which must be finite.
struct DomainSpec {
    int dimension = 1;
    double lower = -kInf;
    double upper = 0.0;
    double truncation_lower = 0.0;

    /// Throws std::invalid_argument on an unusable description
    /// (dimension != 1, empty interval, non-finite truncation).
    void validate() const;

    double width() const { return upper - truncation_lower; }

    /// Membership in the truncated computational interval.
    bool in_truncated(double x) const { return x >= truncation_lower && x < upper; }

    /// Membership in F itself.
    bool in_state_space(double x) const { return x > lower && x < upper; }
};

}  // namespace pdmpfv
