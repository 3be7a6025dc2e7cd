#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pdmpfv/coefficients.hpp"
#include "pdmpfv/mc.hpp"
#include "pdmpfv/mesh.hpp"
#include "pdmpfv/model.hpp"
#include "pdmpfv/solver.hpp"

using namespace pdmpfv;

namespace {

/// Translation flow without stochastic jumps: the tiny rate bound pushes the
/// first candidate far beyond any horizon, so trajectories are a single
/// deterministic flight between boundary hits.
PdmpModel deterministic_translation(double X, double jump_target, double start) {
    PdmpModel m;
    m.domain = DomainSpec{1, -kInf, X, 0.0};
    m.flow.evaluate = [X](double x, double t) { return std::min(x + t, X); };
    m.alpha.evaluate = [X](double x) { return x < X ? X - x : 0.0; };
    m.rate = [](double) { return 0.0; };
    m.rate_bound = 1e-9;
    m.interior_kernel.atoms.push_back(
        KernelAtom{[](double x) { return x; }, [](double) { return 1.0; }});
    m.boundary_kernel.atoms.push_back(
        KernelAtom{[jump_target](double) { return jump_target; }, [](double) { return 1.0; }});
    m.initial_law.atoms.push_back(
        KernelAtom{[start](double) { return start; }, [](double) { return 1.0; }});
    m.name = "translation";
    return m;
}

double l1_distance(const Histogram& h, const std::vector<double>& fv, const Mesh1D& mesh) {
    double d = 0.0;
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        d += mesh.volume(k) * std::abs(h.density[k] - fv[k]);
    }
    return d;
}

}  // namespace

TEST_CASE("pure flow: final state is the flow image of the start") {
    const PdmpModel m = deterministic_translation(10.0, 5.0, 1.25);
    std::mt19937_64 rng(3);
    const TrajectoryResult r = simulate_trajectory(m, 4.5, rng);
    CHECK(r.final_state == 5.75);  // exact: a single flow evaluation
    CHECK(r.boundary_hits == 0);
}

TEST_CASE("deterministic boundary cycle: hit times are exact") {
    // start at 1.9 with bound 2: first hit after 0.1, then per the kernel
    const PdmpModel m = deterministic_translation(2.0, 1.0, 1.9);
    std::mt19937_64 rng(3);
    std::vector<double> hits;
    const TrajectoryResult r = simulate_trajectory(m, 2.5, rng, &hits);
    REQUIRE(r.boundary_hits == 3);
    CHECK(hits[0] == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(hits[1] == doctest::Approx(1.1).epsilon(1e-14));
    CHECK(hits[2] == doctest::Approx(2.1).epsilon(1e-14));
}

TEST_CASE("translation from zero: first hit at the full crossing time") {
    const PdmpModel m = deterministic_translation(2.0, 1.0, 0.0);
    McConfig cfg;
    cfg.particles = 50;
    cfg.horizon = 4.5;
    cfg.seed = 11;
    cfg.histogram_mesh = build_uniform(m.domain, 0.1);
    cfg.sigma_bin_width = 0.5;
    const SigmaSeries s = estimate_sigma_mass(m, cfg);
    // hits at t = 2, 3, 4 for every particle
    CHECK(s.total_per_particle == 3.0);
    CHECK(s.hits_per_particle[4] == 1.0);
    CHECK(s.hits_per_particle[6] == 1.0);
    CHECK(s.hits_per_particle[8] == 1.0);
    CHECK(s.hits_per_particle[0] == 0.0);
    CHECK(s.hits_per_particle[5] == 0.0);

    const Histogram h = estimate_density(m, cfg);
    // every particle sits at 1.5 at the horizon
    CHECK(h.counts[cfg.histogram_mesh.locate(1.5)] == 50);
}

TEST_CASE("single particle occupies exactly one histogram cell") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    McConfig cfg;
    cfg.particles = 1;
    cfg.horizon = 3.0;
    cfg.seed = 5;
    cfg.histogram_mesh = build_uniform(m.domain, 0.1);
    const Histogram h = estimate_density(m, cfg);
    std::uint64_t total = 0;
    int occupied = 0;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        total += h.counts[k];
        if (h.counts[k] > 0) {
            ++occupied;
            CHECK(h.density[k] == doctest::Approx(1.0 / cfg.histogram_mesh.volume(k)));
        }
    }
    CHECK(total == 1);
    CHECK(occupied == 1);
    CHECK(h.outside == 0);
}

TEST_CASE("histograms are reproducible and independent of the thread count") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    McConfig cfg;
    cfg.particles = 20000;
    cfg.horizon = 5.0;
    cfg.seed = 123;
    cfg.histogram_mesh = build_uniform(m.domain, 0.05);

    cfg.threads = 1;
    const Histogram a = estimate_density(m, cfg);
    cfg.threads = 2;
    const Histogram b = estimate_density(m, cfg);
    CHECK(a.counts == b.counts);
    CHECK(a.boundary_hits == b.boundary_hits);

    cfg.seed = 124;
    const Histogram c = estimate_density(m, cfg);
    CHECK(a.counts != c.counts);
}

TEST_CASE("every particle lands in exactly one cell for the TCP models") {
    for (const auto variant : {TcpVariant::Infinite, TcpVariant::Finite, TcpVariant::FiniteJump}) {
        const double X = variant == TcpVariant::Infinite ? 6.0 : 2.0;
        const PdmpModel m = build_tcp_model(variant, X, 0.5, X - 0.05);
        McConfig cfg;
        cfg.particles = 5000;
        cfg.horizon = 5.0;
        cfg.seed = 9;
        cfg.histogram_mesh = build_uniform(m.domain, 0.1);
        const Histogram h = estimate_density(m, cfg);
        std::uint64_t total = h.outside;
        for (const auto c : h.counts) total += c;
        CHECK(total == static_cast<std::uint64_t>(cfg.particles));
        CHECK(h.outside == 0);
    }
}

TEST_CASE("thinning with a constant rate produces exponential inter-jump times") {
    // identity flow, no boundary: accepted jumps form a Poisson process
    PdmpModel m;
    m.domain = DomainSpec{1, -kInf, 1.0, 0.0};
    m.flow.evaluate = [](double x, double) { return x; };
    m.alpha.evaluate = [](double) { return 1e7; };
    const double c = 0.7;
    m.rate = [c](double) { return c; };
    m.rate_bound = 2.0;  // thinning must reject most candidates
    m.interior_kernel.atoms.push_back(
        KernelAtom{[](double x) { return x; }, [](double) { return 1.0; }});
    m.boundary_kernel = m.interior_kernel;
    m.initial_law.atoms.push_back(
        KernelAtom{[](double) { return 0.5; }, [](double) { return 1.0; }});

    const std::size_t n = 100000;
    const double horizon = static_cast<double>(n) / c * 1.05;
    std::mt19937_64 rng(2024);
    std::vector<double> jumps;
    jumps.reserve(n + 1000);
    simulate_trajectory(m, horizon, rng, nullptr, &jumps);
    REQUIRE(jumps.size() >= n);
    jumps.resize(n);

    std::vector<double> gaps(n);
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gaps[i] = jumps[i] - prev;
        prev = jumps[i];
    }
    std::sort(gaps.begin(), gaps.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = 1.0 - std::exp(-c * gaps[i]);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        d = std::max(d, std::max(std::abs(cdf - hi), std::abs(cdf - lo)));
    }
    // two-sided Kolmogorov-Smirnov at significance 0.001
    const double critical = 1.9495 / std::sqrt(static_cast<double>(n));
    CHECK(d <= critical);
}

TEST_CASE("histogram error against the fine solver density scales like 1/sqrt(particles)") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    const Mesh1D mesh = build_uniform(m.domain, 0.01);
    const CoefficientSet coeffs = compute_coefficients(m, mesh, 0.01);
    SchemeParams p;
    p.dt = 0.01;
    p.tau = 0.01;
    p.method = SolveMethod::DirectFactorization;
    TransientOptions topt;
    topt.record_measures = false;
    const TransientResult fv = run_transient(m, mesh, coeffs, p, 5.0, topt);

    McConfig cfg;
    cfg.horizon = 5.0;
    cfg.seed = 7;
    cfg.histogram_mesh = mesh;
    cfg.particles = 2500;
    const double coarse = l1_distance(estimate_density(m, cfg), fv.final_state.p, mesh);
    cfg.particles = 10000;
    const double fine = l1_distance(estimate_density(m, cfg), fv.final_state.p, mesh);
    CHECK(coarse > 1.5 * fine);  // quadrupling the particles halves the noise
    CHECK(fine < 0.15);
}

TEST_CASE("bounded window without forced jump accumulates mass in the last cell") {
    const Mesh1D mesh = build_uniform(DomainSpec{1, -kInf, 2.0, 0.0}, 0.01);
    const PdmpModel m = build_tcp_model(TcpVariant::Finite, 2.0, 0.5,
                                        mesh.center(mesh.size() - 1));
    McConfig cfg;
    cfg.particles = 2000;
    cfg.horizon = 10.0;
    cfg.seed = 31;
    cfg.histogram_mesh = mesh;
    const Histogram h = estimate_density(m, cfg);
    CHECK(h.counts[mesh.size() - 1] > 0);
    CHECK(h.boundary_hits > 0);
}

TEST_CASE("boundary-hit rate stabilizes in the stationary regime") {
    const PdmpModel m = build_tcp_model(TcpVariant::FiniteJump, 2.0, 0.5);
    McConfig cfg;
    cfg.particles = 40000;
    cfg.horizon = 10.0;
    cfg.seed = 17;
    cfg.histogram_mesh = build_uniform(m.domain, 0.1);
    cfg.sigma_bin_width = 1.0;
    const SigmaSeries s = estimate_sigma_mass(m, cfg);
    REQUIRE(s.hits_per_particle.size() >= 10);
    // compare hit counts of the late unit-time bins pairwise
    const double late_a = s.hits_per_particle[7];
    const double late_b = s.hits_per_particle[8];
    const double late_c = s.hits_per_particle[9];
    const double mean = (late_a + late_b + late_c) / 3.0;
    CHECK(mean > 0.0);
    for (const double v : {late_a, late_b, late_c}) {
        CHECK(std::abs(v - mean) <= 0.05 * mean + 3.0 / std::sqrt(40000.0));
    }
}

TEST_CASE("unbounded-window study: trajectories do not reach the bound by T=10") {
    const PdmpModel m = build_tcp_model(TcpVariant::Infinite, 6.0);
    McConfig cfg;
    cfg.particles = 20000;
    cfg.horizon = 10.0;
    cfg.seed = 77;
    cfg.histogram_mesh = build_uniform(m.domain, 0.1);
    const Histogram h = estimate_density(m, cfg);
    CHECK(h.boundary_hits == 0);
}
