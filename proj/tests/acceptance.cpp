#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dense_oracle.hpp"
#include "pdmpfv/coefficients.hpp"
#include "pdmpfv/mc.hpp"
#include "pdmpfv/measures.hpp"
#include "pdmpfv/mesh.hpp"
#include "pdmpfv/model.hpp"
#include "pdmpfv/solver.hpp"

using namespace pdmpfv;

namespace {

void criterion_line(int num, const char* what, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", num, what,
                detail.c_str());
    std::fflush(stdout);
}

struct ShippedCase {
    std::string name;
    PdmpModel model;
    Mesh1D mesh;
    double tau;
    double dt;
};

/// The shipped study configurations: the three window-size models on the
/// four mesh/window/step parameter sets.
std::vector<ShippedCase> shipped_cases() {
    struct ParamSet {
        double h, tau, dt;
    };
    const std::vector<ParamSet> sets = {
        {0.2, 0.2, 0.2}, {0.1, 0.1, 0.1}, {0.01, 0.01, 0.01}, {0.01, 0.005, 0.01}};
    std::vector<ShippedCase> out;
    for (const auto variant :
         {TcpVariant::Infinite, TcpVariant::Finite, TcpVariant::FiniteJump}) {
        const double X = variant == TcpVariant::Infinite ? 6.0 : 2.0;
        for (const auto& set : sets) {
            ShippedCase c;
            c.mesh = build_uniform(DomainSpec{1, -kInf, X, 0.0}, set.h);
            c.model = build_tcp_model(variant, X, 0.5, c.mesh.center(c.mesh.size() - 1));
            c.tau = set.tau;
            c.dt = set.dt;
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s h=%g tau=%g dt=%g",
                          tcp_variant_name(variant).data(), set.h, set.tau, set.dt);
            c.name = buf;
            out.push_back(std::move(c));
        }
    }
    return out;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b,
                   const Mesh1D& mesh) {
    double d = 0.0;
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        d += mesh.volume(k) * std::abs(a[k] - b[k]);
    }
    return d;
}

}  // namespace

TEST_CASE("criterion 1: per-cell balance identity on all shipped configurations") {
    double worst_ratio = 0.0;
    std::string worst_case;
    for (const auto& c : shipped_cases()) {
        const CoefficientSet coeffs = compute_coefficients(c.model, c.mesh, c.tau);
        const BalanceReport rep = verify_balance(coeffs, c.mesh);
        const double ratio = rep.max_violation / (1e-13 * rep.max_cell_volume);
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_case = c.name;
        }
    }
    const bool ok = worst_ratio <= 1.0;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "worst violation = %.3g of the 1e-13*max|K| budget at %s", worst_ratio,
                  worst_case.c_str());
    criterion_line(1, "balance identity", ok, detail);
    CHECK(ok);
}

TEST_CASE("criterion 2: positivity and unit mass over 1000 implicit steps") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    const Mesh1D mesh = build_uniform(m.domain, 0.1);
    const CoefficientSet coeffs = compute_coefficients(m, mesh, 0.1);

    bool ok = true;
    std::string detail;
    for (const auto method : {SolveMethod::FixedPoint, SolveMethod::DirectFactorization}) {
        SchemeParams params;
        params.dt = 0.1;
        params.tau = 0.1;
        params.method = method;
        params.fixed_point_tolerance = 1e-13;
        ImplicitStepper stepper(coeffs, mesh, params);
        DensityState s = init_density(m, mesh);
        double min_density = 0.0, max_mass_error = 0.0;
        for (int n = 0; n < 1000; ++n) {
            s = stepper.step(s);
            for (const double v : s.p) min_density = std::min(min_density, v);
            max_mass_error = std::max(max_mass_error, std::abs(s.mass - 1.0));
        }
        ok = ok && min_density >= 0.0 && max_mass_error <= 1e-9;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s[min=%.3g, |mass-1|<=%.3g] ",
                      method == SolveMethod::FixedPoint ? "fixed-point" : "direct",
                      min_density, max_mass_error);
        detail += buf;
    }
    criterion_line(2, "positivity and unit mass (1000 steps, both methods)", ok, detail);
    CHECK(ok);
}

TEST_CASE("criterion 3: weighted increment sequence nonincreasing in every step") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    const Mesh1D mesh = build_uniform(m.domain, 0.1);
    const CoefficientSet coeffs = compute_coefficients(m, mesh, 0.1);
    SchemeParams params;
    params.dt = 0.1;
    params.tau = 0.1;
    params.method = SolveMethod::FixedPoint;
    params.fixed_point_tolerance = 1e-13;
    ImplicitStepper stepper(coeffs, mesh, params);

    DensityState s = init_density(m, mesh);
    bool ok = true;
    double worst_jump = 0.0;
    long total_iterations = 0;
    for (int n = 0; n < 1000; ++n) {
        const FixedPointResult r = stepper.step_fixed_point_with_history(s);
        ok = ok && r.monotone;
        for (std::size_t i = 1; i < r.u_history.size(); ++i) {
            worst_jump = std::max(worst_jump, r.u_history[i] - r.u_history[i - 1]);
        }
        total_iterations += r.iterations;
        s = r.state;
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "%ld iterations total, worst u increase = %.3g",
                  total_iterations, worst_jump);
    criterion_line(3, "fixed-point monotonicity", ok, detail);
    CHECK(ok);
}

TEST_CASE("criterion 4: solver cross-validation against dense and sparse routes") {
    bool ok = true;
    std::string detail;

    // dense oracle on meshes of at most 32 cells
    double worst_dense = 0.0;
    {
        struct SmallCase {
            TcpVariant variant;
            double X, h;
        };
        for (const auto& sc : {SmallCase{TcpVariant::FiniteJump, 2.0, 0.0625},
                               SmallCase{TcpVariant::Infinite, 6.0, 0.2}}) {
            const Mesh1D mesh = build_uniform(DomainSpec{1, -kInf, sc.X, 0.0}, sc.h);
            REQUIRE(mesh.size() <= 32);
            const PdmpModel m =
                build_tcp_model(sc.variant, sc.X, 0.5, mesh.center(mesh.size() - 1));
            const CoefficientSet coeffs = compute_coefficients(m, mesh, sc.h);
            SchemeParams params;
            params.dt = sc.h;
            params.tau = sc.h;
            params.method = SolveMethod::FixedPoint;
            params.fixed_point_tolerance = 1e-14;
            ImplicitStepper stepper(coeffs, mesh, params);
            DensityState s = init_density(m, mesh);
            for (int n = 0; n < 10; ++n) {
                const std::vector<double> oracle =
                    dense_implicit_solve(coeffs, mesh, params.dt, s.p);
                const DensityState next = stepper.step(s);
                worst_dense = std::max(worst_dense, l1_distance(next.p, oracle, mesh));
                s = next;
            }
        }
        ok = ok && worst_dense <= 1e-12;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "dense<=32cells: %.3g  ", worst_dense);
        detail += buf;
    }

    // sparse factorization on the full shipped meshes
    double worst_sparse = 0.0;
    for (const auto& c : shipped_cases()) {
        const CoefficientSet coeffs = compute_coefficients(c.model, c.mesh, c.tau);
        SchemeParams fp;
        fp.dt = c.dt;
        fp.tau = c.tau;
        fp.method = SolveMethod::FixedPoint;
        SchemeParams direct = fp;
        direct.method = SolveMethod::DirectFactorization;
        ImplicitStepper fp_stepper(coeffs, c.mesh, fp);
        ImplicitStepper lu_stepper(coeffs, c.mesh, direct);
        DensityState s = init_density(c.model, c.mesh);
        for (int n = 0; n < 10; ++n) {
            const DensityState a = fp_stepper.step(s);
            const DensityState b = lu_stepper.step(s);
            worst_sparse = std::max(worst_sparse, weighted_l1_distance(a, b, c.mesh));
            s = a;
        }
    }
    ok = ok && worst_sparse <= 1e-9;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "sparse-full-mesh: %.3g", worst_sparse);
    detail += buf;

    criterion_line(4, "solver cross-validation (1e-12 dense, 1e-9 sparse)", ok, detail);
    CHECK(worst_dense <= 1e-12);
    CHECK(worst_sparse <= 1e-9);
}

TEST_CASE("criterion 5: solver densities match the trajectory oracle at T=10") {
    struct Case {
        TcpVariant variant;
        double X;
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : {Case{TcpVariant::Infinite, 6.0}, Case{TcpVariant::Finite, 2.0},
                          Case{TcpVariant::FiniteJump, 2.0}}) {
        const Mesh1D mesh = build_uniform(DomainSpec{1, -kInf, c.X, 0.0}, 0.01);
        const PdmpModel m =
            build_tcp_model(c.variant, c.X, 0.5, mesh.center(mesh.size() - 1));
        const CoefficientSet coeffs = compute_coefficients(m, mesh, 0.01);
        SchemeParams params;
        params.dt = 0.01;
        params.tau = 0.01;
        params.method = SolveMethod::DirectFactorization;
        TransientOptions topts;
        topts.record_measures = false;
        const TransientResult run = run_transient(m, mesh, coeffs, params, 10.0, topts);

        McConfig mc;
        mc.particles = 1000000;
        mc.horizon = 10.0;
        mc.seed = 20240917;
        mc.histogram_mesh = mesh;
        const Histogram hist = estimate_density(m, mc);

        const double l1 = l1_distance(hist.density, run.final_state.p, mesh);
        bool case_ok = l1 <= 0.05 && hist.outside == 0;
        if (c.variant == TcpVariant::Finite) {
            const std::size_t last = mesh.size() - 1;
            case_ok = case_ok && run.final_state.p[last] > 0.0 && hist.counts[last] > 0;
        }
        ok = ok && case_ok;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%s: L1=%.4f  ",
                      tcp_variant_name(c.variant).data(), l1);
        detail += buf;
    }
    criterion_line(5, "solver vs 1e6-particle oracle (L1 <= 0.05)", ok, detail);
    CHECK(ok);
}

TEST_CASE("criterion 6: large-step stationary state matches the long transient") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    const Mesh1D mesh = build_uniform(m.domain, 0.01);
    const CoefficientSet coeffs = compute_coefficients(m, mesh, 0.01);

    SchemeParams big;
    big.dt = 1e6;
    big.tau = 0.01;
    big.method = SolveMethod::DirectFactorization;
    const StationaryResult st = run_stationary(m, mesh, coeffs, big);

    SchemeParams small;
    small.dt = 0.01;
    small.tau = 0.01;
    small.method = SolveMethod::DirectFactorization;
    TransientOptions topts;
    topts.record_measures = false;
    const TransientResult tr = run_transient(m, mesh, coeffs, small, 10.0, topts);

    const double l1 = weighted_l1_distance(st.state, tr.final_state, mesh);
    const bool ok = st.converged && l1 <= 1e-3;
    char detail[96];
    std::snprintf(detail, sizeof(detail), "L1 = %.3g after %ld stationary steps", l1,
                  st.steps);
    criterion_line(6, "stationarity via large dt (L1 <= 1e-3)", ok, detail);
    CHECK(ok);
}

TEST_CASE("criterion 7: weak residual strictly decreases under refinement") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    const TestFunction bump = make_bump_test_function(1.0, 0.8, 4.0, 9.0);
    std::vector<double> residuals;
    for (const double h : {0.2, 0.1, 0.05}) {
        const Mesh1D mesh = build_uniform(m.domain, h);
        const CoefficientSet coeffs = compute_coefficients(m, mesh, h);
        SchemeParams params;
        params.dt = h;
        params.tau = h;
        params.method = SolveMethod::DirectFactorization;
        const TransientResult run = run_transient(m, mesh, coeffs, params, 10.0);
        residuals.push_back(
            kolmogorov_residual(run.measures, run.final_state, m, bump, 10.0));
    }
    const bool ok = residuals[1] < residuals[0] && residuals[2] < residuals[1];
    char detail[96];
    std::snprintf(detail, sizeof(detail), "residuals %.4g > %.4g > %.4g", residuals[0],
                  residuals[1], residuals[2]);
    criterion_line(7, "weak-residual refinement", ok, detail);
    CHECK(ok);
}

TEST_CASE("criterion 8: hypothesis audit certifies the exponential boundary condition") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    const HypothesisReport rep = audit_hypotheses(m, 400, 20240917);

    const double closed_form = 0.5 * std::exp(-2.0) + 0.125 * (1.0 - std::exp(-4.0));
    double at_b2 = -1.0;
    for (const auto& [B, val] : rep.boundary_exponential) {
        if (B == 2.0) at_b2 = val;
    }
    const bool ok = rep.satisfied_h5c && rep.a0 > 0.0 && rep.a0 < 1.0 && rep.b0 > 0.0 &&
                    at_b2 >= 0.0 && std::abs(at_b2 - closed_form) <= 1e-8;
    char detail[128];
    std::snprintf(detail, sizeof(detail),
                  "(a0, B0) = (%.6g, %.6g); |value(B=2) - closed form| = %.3g", rep.a0,
                  rep.b0, std::abs(at_b2 - closed_form));
    criterion_line(8, "exponential boundary condition certificate", ok, detail);
    CHECK(ok);
}
