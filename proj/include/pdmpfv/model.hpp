#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdmpfv/domain.hpp"

namespace pdmpfv {

/// Deterministic motion x -> phi(x, t). Must satisfy phi(x, 0) = x and the
/// semigroup identity phi(phi(x, t), s) = phi(x, t + s) while the boundary
/// has not been reached.
struct FlowMap {
    std::function<double(double, double)> evaluate;
};

/// First time the flow from x leaves the state space. Zero outside the state
/// space, strictly positive inside. Values >= horizon act as a "never
/// reaches" sentinel for flows that stay interior.
struct HittingTime {
    std::function<double(double)> evaluate;
    double horizon = 1e6;
};

/// Point mass of a transition kernel: source-dependent target and weight.
struct KernelAtom {
    std::function<double(double)> location;
    std::function<double(double)> weight;
};

/// Absolutely continuous part of a transition kernel.
///
/// `density` is the Lebesgue density y -> d(source, y); `mass` its total
/// integral for the given source. `mass_on`, when provided, returns the exact
/// integral over [a, b] and replaces quadrature. `sample`, when provided,
/// maps a uniform [0,1) draw to a target by inverse CDF (required only for
/// trajectory simulation).
struct KernelDensity {
    std::function<double(double, double)> density;
    std::function<double(double)> mass;
    std::function<double(double, double, double)> mass_on;  // (source, a, b)
    std::function<double(double, double)> sample;            // (source, u)
};

/// Transition probability as a finite mixture of atoms plus an optional
/// density part. For every source, atom weights and the density mass must
/// sum to one.
struct MixtureKernel {
    std::vector<KernelAtom> atoms;
    std::optional<KernelDensity> density_part;
};

/// A piecewise deterministic Markov process with forced boundary jumps:
/// flow phi, boundary hitting time alpha, jump rate lambda bounded by
/// rate_bound, interior jump kernel Q, boundary jump kernel q (sources on
/// the active boundary), and the initial law (a mixture whose source
/// argument is ignored).
///
/// All members are pure functions of their arguments; a constructed model is
/// immutable and safe to use from many threads.
struct PdmpModel {
    DomainSpec domain;
    FlowMap flow;
    HittingTime alpha;
    std::function<double(double)> rate;
    double rate_bound = 0.0;
    MixtureKernel interior_kernel;  // Q
    MixtureKernel boundary_kernel;  // q
    MixtureKernel initial_law;      // source argument unused
    std::string name;
};

// ---------------------------------------------------------------------------
// Kernel evaluation

/// Mass the kernel from `source` assigns to the half-open interval [a, b):
/// exact for atoms; density part by closed form when available, otherwise
/// adaptive quadrature at relative tolerance 1e-10.
/// Throws std::invalid_argument unless a < b.
double kernel_mass_on_interval(const MixtureKernel& kernel, double source,
                               double a, double b);

/// Total kernel mass for the given source (atom weights + density mass).
double kernel_total_mass(const MixtureKernel& kernel, double source);

/// Integral of f against the kernel measure restricted to targets in
/// [lo, hi]; atoms outside the range are dropped.
double kernel_expectation(const MixtureKernel& kernel, double source,
                          const std::function<double(double)>& f,
                          double lo, double hi);

/// Draws a target from the kernel. Requires a `sample` function on the
/// density part whenever it carries mass.
double sample_kernel(const MixtureKernel& kernel, double source,
                     std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Built-in TCP window-size models

enum class TcpVariant {
    Infinite,    // unbounded window; the upper bound only truncates
    Finite,      // bounded window, mass accumulates at the bound
    FiniteJump,  // bounded window with a forced jump at the bound
};

TcpVariant tcp_variant_from_name(std::string_view name);
std::string_view tcp_variant_name(TcpVariant v);

/// TCP window-size process on (-inf, X) truncated below at 0: unit drift
/// capped at X, hitting time X - x, jump rate x^+ bounded by X, interior
/// jumps to x/2.
///
/// The boundary kernel depends on the variant:
///  - FiniteJump: atom of weight p at X/2 plus (1-p) uniform on (0, X);
///  - Finite: a single atom at `absorb_point`, which should be the center of
///    the last mesh cell so returned mass stays adjacent to X (callers that
///    know the mesh pass it explicitly; the default X - 0.005 matches the
///    finest shipped mesh h = 0.01);
///  - Infinite: same kernel as FiniteJump; with X large the boundary is
///    never reached and the kernel is immaterial.
///
/// The initial law is a unit atom at 0. Throws std::invalid_argument for
/// X <= 0, p outside [0, 1], or absorb_point outside [0, X).
PdmpModel build_tcp_model(TcpVariant variant, double X, double p = 0.5,
                          double absorb_point = std::numeric_limits<double>::quiet_NaN());

// ---------------------------------------------------------------------------
// Hypothesis audit

/// Numerical audit of the standing assumptions on a model. All estimates are
/// sampled lower bounds; they inform the report and gate nothing.
struct HypothesisReport {
    double lipschitz_flow_estimate = 0.0;   // empirical bound for phi
    double lipschitz_alpha_estimate = 0.0;  // empirical bound for alpha

    std::vector<std::pair<double, double>> tail_Q;  // (r, f_Q(r))
    std::vector<std::pair<double, double>> tail_q;  // (r, f_q(r))

    /// (B, sup over boundary sources of the q-integral of exp(-B alpha)).
    std::vector<std::pair<double, double>> boundary_exponential;
    bool satisfied_h5c = false;
    double a0 = 0.0;
    double b0 = 0.0;

    double max_rate_seen = 0.0;
    bool rate_bound_ok = true;
    double initial_mass = 0.0;
    double kernel_mass_below_truncation = 0.0;  // max over sampled sources

    std::vector<std::string> warnings;
};

/// Deterministic audit given (model, samples, seed). Lipschitz constants are
/// estimated by maximal difference quotients over sampled pairs; the
/// exponential boundary condition is scanned over a geometric grid of B
/// values to find a certifying (a0, B0).
/// Throws std::invalid_argument for samples < 100.
HypothesisReport audit_hypotheses(const PdmpModel& model, int samples,
                                  std::uint64_t seed);

void write_hypothesis_report(const HypothesisReport& report, std::ostream& os);

}  // namespace pdmpfv
