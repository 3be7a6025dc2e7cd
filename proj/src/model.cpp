#include "pdmpfv/model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "pdmpfv/numerics.hpp"

namespace pdmpfv {

void DomainSpec::validate() const {
    if (dimension != 1) {
        throw std::invalid_argument(
            "DomainSpec: only dimension 1 is supported (got " +
            std::to_string(dimension) + ")");
    }
    if (!std::isfinite(upper) || !std::isfinite(truncation_lower)) {
        throw std::invalid_argument("DomainSpec: upper and truncation_lower must be finite");
    }
    if (!(truncation_lower < upper)) {
        throw std::invalid_argument("DomainSpec: truncation_lower must lie below upper");
    }
    if (truncation_lower < lower) {
        throw std::invalid_argument("DomainSpec: truncation_lower must not lie below lower");
    }
}

// ---------------------------------------------------------------------------
// Kernel evaluation

double kernel_mass_on_interval(const MixtureKernel& kernel, double source,
                               double a, double b) {
    if (!(a < b)) throw std::invalid_argument("kernel_mass_on_interval: need a < b");
    double mass = 0.0;
    for (const auto& atom : kernel.atoms) {
        const double y = atom.location(source);
        if (y >= a && y < b) mass += atom.weight(source);
    }
    if (kernel.density_part) {
        const auto& d = *kernel.density_part;
        if (d.mass_on) {
            mass += d.mass_on(source, a, b);
        } else {
            mass += integrate_adaptive([&](double y) { return d.density(source, y); },
                                       a, b, 1e-10, 1e-14);
        }
    }
    return mass;
}

double kernel_total_mass(const MixtureKernel& kernel, double source) {
    double mass = 0.0;
    for (const auto& atom : kernel.atoms) mass += atom.weight(source);
    if (kernel.density_part) mass += kernel.density_part->mass(source);
    return mass;
}

double kernel_expectation(const MixtureKernel& kernel, double source,
                          const std::function<double(double)>& f,
                          double lo, double hi) {
    double out = 0.0;
    for (const auto& atom : kernel.atoms) {
        const double y = atom.location(source);
        if (y >= lo && y < hi) out += atom.weight(source) * f(y);
    }
    if (kernel.density_part) {
        const auto& d = *kernel.density_part;
        out += integrate_adaptive(
            [&](double y) { return d.density(source, y) * f(y); }, lo, hi, 1e-10, 1e-14);
    }
    return out;
}

double sample_kernel(const MixtureKernel& kernel, double source, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng);
    double acc = 0.0;
    for (const auto& atom : kernel.atoms) {
        acc += atom.weight(source);
        if (u < acc) return atom.location(source);
    }
    if (kernel.density_part) {
        const auto& d = *kernel.density_part;
        if (!d.sample) {
            throw std::runtime_error("sample_kernel: density part carries mass but has no sampler");
        }
        return d.sample(source, u01(rng));
    }
    if (kernel.atoms.empty()) {
        throw std::runtime_error("sample_kernel: kernel has no atoms and no density part");
    }
    // u fell into the roundoff gap above the accumulated weights
    return kernel.atoms.back().location(source);
}

// ---------------------------------------------------------------------------
// TCP window-size models

TcpVariant tcp_variant_from_name(std::string_view name) {
    if (name == "tcp-i" || name == "TCP-I") return TcpVariant::Infinite;
    if (name == "tcp-f" || name == "TCP-F") return TcpVariant::Finite;
    if (name == "tcp-fj" || name == "TCP-FJ") return TcpVariant::FiniteJump;
    throw std::invalid_argument("unknown model name: " + std::string(name) +
                                " (expected tcp-i, tcp-f or tcp-fj)");
}

std::string_view tcp_variant_name(TcpVariant v) {
    switch (v) {
        case TcpVariant::Infinite: return "tcp-i";
        case TcpVariant::Finite: return "tcp-f";
        case TcpVariant::FiniteJump: return "tcp-fj";
    }
    return "?";
}

namespace {

MixtureKernel uniform_mixture_boundary_kernel(double X, double p) {
    // p * delta_{X/2} + (1-p) * Uniform(0, X)
    MixtureKernel q;
    if (p > 0.0) {
        q.atoms.push_back(KernelAtom{
            [X](double) { return 0.5 * X; },
            [p](double) { return p; },
        });
    }
    if (p < 1.0) {
        KernelDensity d;
        const double c = (1.0 - p) / X;
        d.density = [X, c](double, double y) { return (y > 0.0 && y < X) ? c : 0.0; };
        d.mass = [p](double) { return 1.0 - p; };
        d.mass_on = [X, c](double, double a, double b) {
            return c * std::max(0.0, std::min(b, X) - std::max(a, 0.0));
        };
        d.sample = [X](double, double u) { return u * X; };
        q.density_part = d;
    }
    return q;
}

}  // namespace

PdmpModel build_tcp_model(TcpVariant variant, double X, double p, double absorb_point) {
    if (!(X > 0.0)) throw std::invalid_argument("build_tcp_model: X must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("build_tcp_model: p must lie in [0, 1]");
    if (std::isnan(absorb_point)) absorb_point = X - 0.005;
    if (variant == TcpVariant::Finite && !(absorb_point >= 0.0 && absorb_point < X)) {
        throw std::invalid_argument("build_tcp_model: absorb_point must lie in [0, X)");
    }

    PdmpModel m;
    m.domain = DomainSpec{1, -kInf, X, 0.0};
    m.flow.evaluate = [X](double x, double t) { return std::min(x + t, X); };
    m.alpha.evaluate = [X](double x) { return x < X ? X - x : 0.0; };
    m.rate = [](double x) { return x > 0.0 ? x : 0.0; };
    m.rate_bound = X;

    // interior jumps always halve the window
    m.interior_kernel.atoms.push_back(KernelAtom{
        [](double x) { return 0.5 * x; },
        [](double) { return 1.0; },
    });

    switch (variant) {
        case TcpVariant::FiniteJump:
        case TcpVariant::Infinite:
            m.boundary_kernel = uniform_mixture_boundary_kernel(X, p);
            break;
        case TcpVariant::Finite:
            // absorbing realization: returned mass stays adjacent to the bound
            m.boundary_kernel.atoms.push_back(KernelAtom{
                [absorb_point](double) { return absorb_point; },
                [](double) { return 1.0; },
            });
            break;
    }

    m.initial_law.atoms.push_back(KernelAtom{
        [](double) { return 0.0; },
        [](double) { return 1.0; },
    });

    m.name = std::string(tcp_variant_name(variant));
    return m;
}

// ---------------------------------------------------------------------------
// Hypothesis audit

namespace {

double uniform_in(std::mt19937_64& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

}  // namespace

HypothesisReport audit_hypotheses(const PdmpModel& model, int samples,
                                  std::uint64_t seed) {
    if (samples < 100) throw std::invalid_argument("audit_hypotheses: need samples >= 100");
    model.domain.validate();

    const double lo = model.domain.truncation_lower;
    const double hi = model.domain.upper;
    const double width = hi - lo;

    std::mt19937_64 rng(splitmix64(seed ^ 0x61756469745F6831ULL));
    HypothesisReport rep;

    std::vector<double> xs(static_cast<std::size_t>(samples));
    for (auto& x : xs) x = uniform_in(rng, lo, hi);

    // Lipschitz estimate for the flow in (x, t) jointly (l1 metric on the pair).
    for (int i = 0; i < samples; ++i) {
        const double x1 = uniform_in(rng, lo, hi), x2 = uniform_in(rng, lo, hi);
        const double t1 = uniform_in(rng, 0.0, width), t2 = uniform_in(rng, 0.0, width);
        const double den = std::abs(x1 - x2) + std::abs(t1 - t2);
        if (den < 1e-12) continue;
        const double num = std::abs(model.flow.evaluate(x1, t1) - model.flow.evaluate(x2, t2));
        rep.lipschitz_flow_estimate = std::max(rep.lipschitz_flow_estimate, num / den);
    }

    // Lipschitz estimate for alpha; pairs with a capped value are skipped.
    for (int i = 0; i < samples; ++i) {
        const double x1 = uniform_in(rng, lo, hi), x2 = uniform_in(rng, lo, hi);
        const double a1 = model.alpha.evaluate(x1), a2 = model.alpha.evaluate(x2);
        if (a1 >= model.alpha.horizon || a2 >= model.alpha.horizon) continue;
        if (std::abs(x1 - x2) < 1e-12) continue;
        rep.lipschitz_alpha_estimate =
            std::max(rep.lipschitz_alpha_estimate, std::abs(a1 - a2) / std::abs(x1 - x2));
    }

    // Rate bound.
    for (const double x : xs) {
        rep.max_rate_seen = std::max(rep.max_rate_seen, model.rate(x));
    }
    rep.rate_bound_ok = rep.max_rate_seen <= model.rate_bound + 1e-12;
    if (!rep.rate_bound_ok) rep.warnings.push_back("rate exceeds rate_bound on samples");

    // Boundary sources reached by the flow from sampled interior points.
    std::vector<double> boundary_sources;
    for (const double x : xs) {
        const double a = model.alpha.evaluate(x);
        if (a >= model.alpha.horizon) continue;
        const double z = model.flow.evaluate(x, a);
        const bool seen = std::any_of(boundary_sources.begin(), boundary_sources.end(),
                                      [z](double w) { return std::abs(w - z) <= 1e-12; });
        if (!seen) boundary_sources.push_back(z);
    }

    // Kernel tails f_Q and f_q on a grid of radii.
    const std::vector<double> radii = {0.0,         width / 8.0, width / 4.0,
                                       width / 2.0, 0.75 * width, width};
    for (const double r : radii) {
        double fq = 0.0;
        for (const double x : xs) {
            const double a = std::abs(x) + r;
            if (a < hi) fq = std::max(fq, kernel_mass_on_interval(model.interior_kernel, x, a, hi));
        }
        rep.tail_Q.emplace_back(r, fq);

        double fqb = 0.0;
        for (const double z : boundary_sources) {
            const double a = std::abs(z) + r;
            if (a < hi) fqb = std::max(fqb, kernel_mass_on_interval(model.boundary_kernel, z, a, hi));
        }
        rep.tail_q.emplace_back(r, fqb);
    }

    // Mass placed below the truncated interval (kernels should not leak there).
    const double probe_lo = lo - 16.0 * std::max(width, 1.0);
    for (const double x : xs) {
        rep.kernel_mass_below_truncation =
            std::max(rep.kernel_mass_below_truncation,
                     kernel_mass_on_interval(model.interior_kernel, x, probe_lo, lo));
    }
    for (const double z : boundary_sources) {
        rep.kernel_mass_below_truncation =
            std::max(rep.kernel_mass_below_truncation,
                     kernel_mass_on_interval(model.boundary_kernel, z, probe_lo, lo));
    }
    if (rep.kernel_mass_below_truncation > 1e-12) {
        rep.warnings.push_back("kernel places mass below the truncated interval");
    }

    // Exponential boundary condition: scan B over a geometric grid for
    // sup over boundary sources of the q-integral of exp(-B alpha).
    for (int k = -4; k <= 12; ++k) {
        const double B = std::ldexp(1.0, k);
        double sup = 0.0;
        for (const double z : boundary_sources) {
            const double val = kernel_expectation(
                model.boundary_kernel, z,
                [&](double y) {
                    const double a = model.alpha.evaluate(y);
                    return a >= model.alpha.horizon ? 0.0 : std::exp(-B * a);
                },
                lo, hi);
            sup = std::max(sup, val);
        }
        rep.boundary_exponential.emplace_back(B, sup);
        if (!rep.satisfied_h5c && sup <= 1.0 - 1e-8) {
            rep.satisfied_h5c = true;
            rep.b0 = B;
            rep.a0 = 1.0 - sup;
        }
    }
    if (boundary_sources.empty()) {
        // flow never reaches the boundary within the horizon; condition is vacuous
        rep.satisfied_h5c = true;
        rep.a0 = 1.0;
        rep.b0 = rep.boundary_exponential.empty() ? 0.0 : rep.boundary_exponential.front().first;
        rep.warnings.push_back("no boundary source sampled; exponential condition is vacuous");
    }
    if (!rep.satisfied_h5c) {
        rep.warnings.push_back("exponential boundary condition not certified on the scanned grid");
    }

    rep.initial_mass = kernel_total_mass(model.initial_law, 0.0);
    if (std::abs(rep.initial_mass - 1.0) > 1e-12) {
        rep.warnings.push_back("initial law mass differs from 1");
    }

    return rep;
}

void write_hypothesis_report(const HypothesisReport& rep, std::ostream& os) {
    os << "lipschitz_flow_estimate: " << rep.lipschitz_flow_estimate << "\n";
    os << "lipschitz_alpha_estimate: " << rep.lipschitz_alpha_estimate << "\n";
    os << "max_rate_seen: " << rep.max_rate_seen << "\n";
    os << "rate_bound_ok: " << (rep.rate_bound_ok ? "yes" : "no") << "\n";
    os << "initial_mass: " << rep.initial_mass << "\n";
    os << "kernel_mass_below_truncation: " << rep.kernel_mass_below_truncation << "\n";
    os << "satisfied_h5c: " << (rep.satisfied_h5c ? "yes" : "no") << "\n";
    os << "a0: " << rep.a0 << "\n";
    os << "b0: " << rep.b0 << "\n";
    os << "tail_Q:";
    for (const auto& [r, v] : rep.tail_Q) os << " (" << r << ", " << v << ")";
    os << "\n";
    os << "tail_q:";
    for (const auto& [r, v] : rep.tail_q) os << " (" << r << ", " << v << ")";
    os << "\n";
    os << "boundary_exponential:";
    for (const auto& [B, v] : rep.boundary_exponential) os << " (" << B << ", " << v << ")";
    os << "\n";
    for (const auto& w : rep.warnings) os << "warning: " << w << "\n";
}

}  // namespace pdmpfv
