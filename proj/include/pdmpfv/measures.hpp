#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdmpfv/coefficients.hpp"
#include "pdmpfv/density.hpp"
#include "pdmpfv/mesh.hpp"
#include "pdmpfv/model.hpp"

namespace pdmpfv {

/// Discrete occupation and boundary measures accumulated over a run.
///
/// Step n contributes, at time n*dt,
///   mu:    weight dt * |K| * p_{n+1}[K] spread over cell K,
///   sigma: weight dt * p_{n+1}[K] * rate for each boundary sample
///          (location, rate) of cell K.
/// `densities[n]` stores p_{n+1}. Boundary samples are shared with the
/// coefficient set that produced the run.
struct DiscreteMeasures {
    double dt = 0.0;
    double tau = 0.0;
    Mesh1D mesh;
    std::vector<std::vector<double>> densities;
    std::vector<std::vector<BoundarySample>> boundary_samples;
    int quad_points = 8;  // per-cell quadrature for integrals of test functions

    std::size_t steps() const { return densities.size(); }
};

/// Bounded test function vanishing for t >= support_end.
struct TestFunction {
    std::function<double(double, double)> evaluate;  // (x, t)
    double support_end = 0.0;
    std::string smoothness;  // informative only
};

/// Integral of f against the occupation measure:
/// sum_n dt sum_K p_{n+1}[K] * integral_K f(x, n*dt) dx.
double integrate_mu(const DiscreteMeasures& measures, const TestFunction& f);

/// Integral of f against the boundary measure, evaluated at the stored
/// boundary images.
double integrate_sigma(const DiscreteMeasures& measures, const TestFunction& f);

/// Derivative of g along the flow at (x, t): Richardson-extrapolated forward
/// difference with steps epsilon and epsilon/2.
/// Throws std::invalid_argument unless 0 < epsilon < alpha(x).
double flow_derivative(const TestFunction& g, const PdmpModel& model, double x,
                       double t, double epsilon);

/// Absolute residual of the weak balance identity over [0, T):
///   int g(.,T) rho_T - int g(.,0) rho_ini
///   - int d_flow g dmu - int lambda (int g dQ - g) dmu - int (int g dq - g) dsigma,
/// with rho_T the given final density read as piecewise constant. The
/// discrete measures place step n at time n*dt, so the residual carries an
/// O(dt) time-quadrature component by construction.
double kolmogorov_residual(const DiscreteMeasures& measures, const DensityState& final_density,
                           const PdmpModel& model, const TestFunction& g, double T);

/// CSV atom lists (t, x_or_cell_center, weight), full precision.
void write_mu_atoms_csv(const DiscreteMeasures& measures, std::ostream& os);
void write_sigma_atoms_csv(const DiscreteMeasures& measures, std::ostream& os);

// ---------------------------------------------------------------------------
// Shipped test functions (all C-infinity)

/// Bump in x: exp(1 - 1/(1 - s^2)) with s = (x - center)/halfwidth, zero for
/// |s| >= 1.
std::function<double(double)> smooth_bump(double center, double halfwidth);

/// Cutoff in t: one until t1, smooth descent to zero at t2, zero after.
std::function<double(double)> smooth_time_cutoff(double t1, double t2);

/// Product test function bump(x) * cutoff(t) with support_end = t2.
TestFunction make_bump_test_function(double center, double halfwidth, double t1, double t2);

/// x-independent test function c * cutoff(t) with support_end = t2.
TestFunction make_time_only_test_function(double c, double t1, double t2);

}  // namespace pdmpfv
