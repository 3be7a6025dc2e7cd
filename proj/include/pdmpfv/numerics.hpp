#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

namespace pdmpfv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// SplitMix64 mixer; used to derive independent RNG seeds from (seed, index).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Adaptive Simpson quadrature of f over [a, b].
///
/// Recursion stops once the local Simpson refinement error is below the
/// mixed tolerance rel_tol * |whole| + abs_tol, or at max_depth.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10, double abs_tol = 1e-14,
                          int max_depth = 52);

/// Runs fn(begin, end) over disjoint chunks of [0, n), possibly on several
/// threads. Chunk boundaries depend only on n and the worker count, and
/// workers write disjoint state, so results are deterministic.
void parallel_for_chunks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace pdmpfv
