#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "pdmpfv/coefficients.hpp"
#include "pdmpfv/density.hpp"
#include "pdmpfv/measures.hpp"
#include "pdmpfv/mesh.hpp"
#include "pdmpfv/model.hpp"

namespace pdmpfv {

enum class SolveMethod {
    FixedPoint,           // contraction iteration, positivity bitwise
    DirectFactorization,  // one sparse LU reused across all steps
};

struct SchemeParams {
    double dt = 0.0;
    double tau = 0.0;
    double fixed_point_tolerance = 1e-12;  // on the weighted L1 increment u_k
    long max_fixed_point_iterations = 1000000;
    SolveMethod method = SolveMethod::FixedPoint;
};

/// Projects the initial law onto the mesh: p_0[K] = ini(K) / |K|.
/// Throws std::runtime_error if more than 1e-12 of the initial mass falls
/// outside the truncated interval (the message reports the escaping mass).
DensityState init_density(const PdmpModel& model, const Mesh1D& mesh);

struct FixedPointResult {
    DensityState state;
    long iterations = 0;
    double final_u = 0.0;
    bool monotone = true;             // u_{k+1} <= u_k at every k
    std::vector<double> u_history;
};

/// Solves the implicit update by the contraction iteration
///   p_(k+1)[K] = (dt * sum_L p_(k)[L] * (v_LK + lambda_LK + q_LK) + |K| rhs[K])
///                / ((1 + dt/tau)|K| + dt lambda_K),
/// starting from p_(0) = rhs. Terminates once the weighted increment
///   u_k = sum_L (dt/tau |L| + dt lambda_L) |p_(k)[L] - p_(k-1)[L]|
/// falls below the tolerance. Every iterate is nonnegative.
/// Throws std::runtime_error when the iteration budget is exhausted.
FixedPointResult fixed_point_solve(const DensityState& rhs, const CoefficientSet& coeffs,
                                   const Mesh1D& mesh, const SchemeParams& params);

/// One implicit time step. The system matrix is time independent, so the
/// direct method factorizes once on construction and reuses the
/// factorization for every step.
class ImplicitStepper {
public:
    ImplicitStepper(const CoefficientSet& coeffs, const Mesh1D& mesh, SchemeParams params);
    ~ImplicitStepper();
    ImplicitStepper(ImplicitStepper&&) noexcept;
    ImplicitStepper& operator=(ImplicitStepper&&) noexcept;

    struct StepInfo {
        long fp_iterations = 0;
        bool fp_monotone = true;
        double clamped_mass = 0.0;  // direct method: negative roundoff folded back
        double lost_mass = 0.0;     // mass leaving the truncation during this step
    };

    DensityState step(const DensityState& state, StepInfo* info = nullptr) const;

    /// Fixed-point solve of one step with the full u_k history attached,
    /// regardless of the configured method.
    FixedPointResult step_fixed_point_with_history(const DensityState& rhs) const;

    const SchemeParams& params() const { return params_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    SchemeParams params_;
};

/// Convenience wrapper building a one-shot stepper.
DensityState step_implicit(const DensityState& state, const CoefficientSet& coeffs,
                           const Mesh1D& mesh, const SchemeParams& params);

struct TransientOptions {
    std::vector<double> snapshot_times;
    bool record_measures = true;
    long log_every = 0;  // stderr progress line every N steps; 0 disables
};

struct TransientResult {
    DensityState final_state;
    std::vector<std::pair<double, DensityState>> snapshots;
    DiscreteMeasures measures;
    double lost_mass = 0.0;
    double max_mass_error = 0.0;  // max_n |mass_n + lost_n - 1|
    double min_density = 0.0;
    bool fp_monotone_all = true;
    std::vector<double> sigma_step_mass;  // dt * sum_K p_{n+1}[K] q_K per step
};

/// Advances ceil(T / dt) steps from the initial law, recording snapshots at
/// the requested times (the final state is always recorded) and accumulating
/// the discrete occupation and boundary measures.
TransientResult run_transient(const PdmpModel& model, const Mesh1D& mesh,
                              const CoefficientSet& coeffs, const SchemeParams& params,
                              double T, const TransientOptions& options = {});

struct StationaryOptions {
    double state_tolerance = 1e-10;  // weighted L1 between successive states
    long max_steps = 10000;
    double dt_warn_threshold = 1e3;
};

struct StationaryResult {
    DensityState state;
    long steps = 0;
    bool converged = false;
    double last_delta = 0.0;
    std::vector<std::string> warnings;
};

/// Iterates the implicit step with a large dt until the state stops moving;
/// the discrete stationary state does not depend on dt, large dt just gets
/// there in a handful of steps. Warns when dt is below the configured
/// threshold. Throws std::runtime_error when the step budget is exhausted.
StationaryResult run_stationary(const PdmpModel& model, const Mesh1D& mesh,
                                const CoefficientSet& coeffs, const SchemeParams& params,
                                const StationaryOptions& options = {});

}  // namespace pdmpfv
