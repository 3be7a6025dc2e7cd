#pragma once

#include <vector>

#include "pdmpfv/mesh.hpp"

namespace pdmpfv {

/// Piecewise-constant probability density over mesh cells at time index n.
/// Entries are nonnegative; sum_K |K| p[K] stays at one up to the reported
/// lost mass.
struct DensityState {
    std::vector<double> p;
    long n = 0;
    double mass = 0.0;

    double recompute_mass(const Mesh1D& mesh);
};

/// L1 distance in measure space: sum_K |K| * |a_K - b_K|.
double weighted_l1_distance(const DensityState& a, const DensityState& b,
                            const Mesh1D& mesh);

}  // namespace pdmpfv
