#include "pdmpfv/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "pdmpfv/numerics.hpp"

namespace pdmpfv {

namespace {

/// Midpoint-composite integral of x -> f(x, t) over cell k.
double cell_integral(const DiscreteMeasures& md, std::size_t k, double t,
                     const std::function<double(double, double)>& f) {
    const double a = md.mesh.left(k), b = md.mesh.right(k);
    const int m = md.quad_points;
    const double w = (b - a) / static_cast<double>(m);
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x = a + (static_cast<double>(i) + 0.5) * w;
        s += f(x, t);
    }
    return s * w;
}

}  // namespace

double integrate_mu(const DiscreteMeasures& md, const TestFunction& f) {
    double total = 0.0;
    for (std::size_t n = 0; n < md.steps(); ++n) {
        const double t = static_cast<double>(n) * md.dt;
        if (f.support_end > 0.0 && t >= f.support_end) break;
        const auto& p = md.densities[n];
        double slice = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (p[k] == 0.0) continue;
            slice += p[k] * cell_integral(md, k, t, f.evaluate);
        }
        total += md.dt * slice;
    }
    return total;
}

double integrate_sigma(const DiscreteMeasures& md, const TestFunction& f) {
    double total = 0.0;
    for (std::size_t n = 0; n < md.steps(); ++n) {
        const double t = static_cast<double>(n) * md.dt;
        if (f.support_end > 0.0 && t >= f.support_end) break;
        const auto& p = md.densities[n];
        double slice = 0.0;
        for (std::size_t k = 0; k < md.boundary_samples.size(); ++k) {
            if (md.boundary_samples[k].empty() || p[k] == 0.0) continue;
            double cell = 0.0;
            for (const auto& s : md.boundary_samples[k]) {
                cell += s.rate * f.evaluate(s.location, t);
            }
            slice += p[k] * cell;
        }
        total += md.dt * slice;
    }
    return total;
}

double flow_derivative(const TestFunction& g, const PdmpModel& model, double x,
                       double t, double epsilon) {
    if (!(epsilon > 0.0) || epsilon >= model.alpha.evaluate(x)) {
        throw std::invalid_argument("flow_derivative: need 0 < epsilon < alpha(x)");
    }
    const double g0 = g.evaluate(x, t);
    auto fwd = [&](double e) {
        return (g.evaluate(model.flow.evaluate(x, e), t + e) - g0) / e;
    };
    // forward differences are first order; Richardson cancels the O(e) term
    return 2.0 * fwd(0.5 * epsilon) - fwd(epsilon);
}

double kolmogorov_residual(const DiscreteMeasures& md, const DensityState& final_density,
                           const PdmpModel& model, const TestFunction& g, double T) {
    const double lo = model.domain.truncation_lower;
    const double hi = model.domain.upper;

    // terminal and initial terms
    double lhs = 0.0;
    for (std::size_t k = 0; k < final_density.p.size(); ++k) {
        if (final_density.p[k] == 0.0) continue;
        lhs += final_density.p[k] * cell_integral(md, k, T, g.evaluate);
    }
    const double ini = kernel_expectation(
        model.initial_law, 0.0, [&](double y) { return g.evaluate(y, 0.0); }, lo, hi);

    // transport term: derivative along the flow against mu
    const double eps0 = 1e-5;
    TestFunction transport;
    transport.support_end = g.support_end;
    transport.evaluate = [&](double x, double t) {
        const double a = model.alpha.evaluate(x);
        const double eps = std::min(eps0, 0.5 * a);
        return flow_derivative(g, model, x, t, eps);
    };
    const double mu_transport = integrate_mu(md, transport);

    // interior jump term: lambda (int g dQ - g) against mu
    TestFunction interior;
    interior.support_end = g.support_end;
    interior.evaluate = [&](double x, double t) {
        const double lam = model.rate(x);
        if (lam == 0.0) return 0.0;
        const double expect = kernel_expectation(
            model.interior_kernel, x, [&](double y) { return g.evaluate(y, t); }, lo, hi);
        return lam * (expect - g.evaluate(x, t));
    };
    const double mu_jump = integrate_mu(md, interior);

    // boundary term: (int g dq - g) against sigma
    TestFunction boundary;
    boundary.support_end = g.support_end;
    boundary.evaluate = [&](double z, double t) {
        const double expect = kernel_expectation(
            model.boundary_kernel, z, [&](double y) { return g.evaluate(y, t); }, lo, hi);
        return expect - g.evaluate(z, t);
    };
    const double sigma_jump = integrate_sigma(md, boundary);

    return std::abs(lhs - ini - mu_transport - mu_jump - sigma_jump);
}

void write_mu_atoms_csv(const DiscreteMeasures& md, std::ostream& os) {
    char buf[96];
    os << "t,x,weight\n";
    for (std::size_t n = 0; n < md.steps(); ++n) {
        const double t = static_cast<double>(n) * md.dt;
        const auto& p = md.densities[n];
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (p[k] == 0.0) continue;
            const double weight = md.dt * md.mesh.volume(k) * p[k];
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t, md.mesh.center(k), weight);
            os << buf;
        }
    }
}

void write_sigma_atoms_csv(const DiscreteMeasures& md, std::ostream& os) {
    char buf[96];
    os << "t,x,weight\n";
    for (std::size_t n = 0; n < md.steps(); ++n) {
        const double t = static_cast<double>(n) * md.dt;
        const auto& p = md.densities[n];
        for (std::size_t k = 0; k < md.boundary_samples.size(); ++k) {
            if (md.boundary_samples[k].empty() || p[k] == 0.0) continue;
            for (const auto& s : md.boundary_samples[k]) {
                const double weight = md.dt * p[k] * s.rate;
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t, s.location, weight);
                os << buf;
            }
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

double cinf_transition(double s) {
    // 0 for s <= 0, 1 for s >= 1
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / s);
    const double b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

}  // namespace

std::function<double(double)> smooth_bump(double center, double halfwidth) {
    return [center, halfwidth](double x) {
        const double s = (x - center) / halfwidth;
        const double r2 = s * s;
        if (r2 >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - r2));
    };
}

std::function<double(double)> smooth_time_cutoff(double t1, double t2) {
    if (!(t1 < t2)) throw std::invalid_argument("smooth_time_cutoff: need t1 < t2");
    return [t1, t2](double t) {
        return 1.0 - cinf_transition((t - t1) / (t2 - t1));
    };
}

TestFunction make_bump_test_function(double center, double halfwidth, double t1, double t2) {
    TestFunction g;
    auto bx = smooth_bump(center, halfwidth);
    auto ct = smooth_time_cutoff(t1, t2);
    g.evaluate = [bx, ct](double x, double t) { return bx(x) * ct(t); };
    g.support_end = t2;
    g.smoothness = "C-infinity";
    return g;
}

TestFunction make_time_only_test_function(double c, double t1, double t2) {
    TestFunction g;
    auto ct = smooth_time_cutoff(t1, t2);
    g.evaluate = [c, ct](double, double t) { return c * ct(t); };
    g.support_end = t2;
    g.smoothness = "C-infinity";
    return g;
}

}  // namespace pdmpfv
