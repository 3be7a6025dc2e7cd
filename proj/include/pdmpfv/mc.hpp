#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pdmpfv/mesh.hpp"
#include "pdmpfv/model.hpp"

namespace pdmpfv {

/// Trajectory-simulation configuration. Each particle gets its own RNG
/// stream derived from (seed, particle index), so results do not depend on
/// the batch layout or thread count.
struct McConfig {
    long particles = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    Mesh1D histogram_mesh;
    double sigma_bin_width = 0.0;  // hit-time bin width; 0 disables the series
    int threads = 0;               // 0 = hardware concurrency
};

struct Histogram {
    std::vector<std::uint64_t> counts;
    std::vector<double> density;  // counts / (particles * |K|)
    std::uint64_t boundary_hits = 0;
    std::uint64_t outside = 0;  // particles ending outside the truncated interval
    long particles = 0;
};

struct TrajectoryResult {
    double final_state = 0.0;
    long boundary_hits = 0;
};

/// Simulates one trajectory to the horizon: exponential(rate_bound)
/// candidate times thinned by rate/rate_bound for stochastic jumps, with
/// deterministic boundary jumps whenever the hitting time elapses first
/// (ties within 1e-14 go to the boundary). Optional sinks receive boundary
/// hit times and accepted interior jump times.
TrajectoryResult simulate_trajectory(const PdmpModel& model, double horizon,
                                     std::mt19937_64& rng,
                                     std::vector<double>* hit_times = nullptr,
                                     std::vector<double>* jump_times = nullptr);

/// Runs config.particles independent trajectories and bins the final states
/// on the histogram mesh. Deterministic given (config, seed).
Histogram estimate_density(const PdmpModel& model, const McConfig& config);

struct SigmaSeries {
    double bin_width = 0.0;
    std::vector<double> hits_per_particle;  // indexed by time bin
    double total_per_particle = 0.0;
};

/// Bins boundary-hit times of all particles; comparable to the per-step
/// boundary mass of a finite-volume run with dt = bin width.
SigmaSeries estimate_sigma_mass(const PdmpModel& model, const McConfig& config);

}  // namespace pdmpfv
