#include "pdmpfv/mc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "pdmpfv/numerics.hpp"

namespace pdmpfv {

namespace {

constexpr double kBoundaryTieWindow = 1e-14;

double exp_draw(std::mt19937_64& rng, double rate) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    return -std::log1p(-u01(rng)) / rate;
}

std::mt19937_64 particle_rng(std::uint64_t seed, long particle) {
    return std::mt19937_64(
        splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(particle + 1))));
}

}  // namespace

TrajectoryResult simulate_trajectory(const PdmpModel& model, double horizon,
                                     std::mt19937_64& rng,
                                     std::vector<double>* hit_times,
                                     std::vector<double>* jump_times) {
    if (!(model.rate_bound > 0.0)) {
        throw std::invalid_argument("simulate_trajectory: rate_bound must be positive");
    }
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    TrajectoryResult out;
    double x = sample_kernel(model.initial_law, 0.0, rng);
    double t = 0.0;

    while (t < horizon) {
        const double remaining = horizon - t;
        const double a = model.alpha.evaluate(x);
        const double e = exp_draw(rng, model.rate_bound);

        if (a <= std::min(e + kBoundaryTieWindow, remaining)) {
            // forced boundary jump
            t += a;
            const double z = model.flow.evaluate(x, a);
            ++out.boundary_hits;
            if (hit_times) hit_times->push_back(t);
            x = sample_kernel(model.boundary_kernel, z, rng);
        } else if (e <= remaining) {
            // candidate stochastic jump, thinned by rate/rate_bound
            t += e;
            x = model.flow.evaluate(x, e);
            if (u01(rng) * model.rate_bound < model.rate(x)) {
                if (jump_times) jump_times->push_back(t);
                x = sample_kernel(model.interior_kernel, x, rng);
            }
        } else {
            // horizon reached mid-flight
            x = model.flow.evaluate(x, remaining);
            t = horizon;
            if (!(x < model.domain.upper)) {
                // exact arrival at the boundary: the process is right
                // continuous, so the state at the horizon is the jump target
                ++out.boundary_hits;
                if (hit_times) hit_times->push_back(horizon);
                x = sample_kernel(model.boundary_kernel, x, rng);
            }
        }
    }

    out.final_state = x;
    return out;
}

namespace {

template <typename PerParticle>
void run_particles(const McConfig& config, const PerParticle& body) {
    if (config.particles < 1) {
        throw std::invalid_argument("estimate_density: need at least one particle");
    }
    const auto n = static_cast<std::size_t>(config.particles);
    std::size_t workers = config.threads > 0
                              ? static_cast<std::size_t>(config.threads)
                              : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, n);

    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, w, begin, end] { body(w, begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

Histogram estimate_density(const PdmpModel& model, const McConfig& config) {
    if (config.histogram_mesh.empty()) {
        throw std::invalid_argument("estimate_density: histogram mesh is empty");
    }
    const std::size_t cells = config.histogram_mesh.size();
    const std::size_t workers =
        config.threads > 0 ? static_cast<std::size_t>(config.threads)
                           : std::max<std::size_t>(1, std::thread::hardware_concurrency());

    std::vector<std::vector<std::uint64_t>> counts(workers,
                                                   std::vector<std::uint64_t>(cells, 0));
    std::vector<std::uint64_t> hits(workers, 0);
    std::vector<std::uint64_t> outside(workers, 0);

    run_particles(config, [&](std::size_t w, std::size_t begin, std::size_t end) {
        auto& local = counts[w];
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = particle_rng(config.seed, static_cast<long>(i));
            const TrajectoryResult r = simulate_trajectory(model, config.horizon, rng);
            hits[w] += static_cast<std::uint64_t>(r.boundary_hits);
            const std::size_t idx = config.histogram_mesh.locate(r.final_state);
            if (idx == Mesh1D::npos) {
                ++outside[w];
            } else {
                ++local[idx];
            }
        }
    });

    Histogram h;
    h.particles = config.particles;
    h.counts.assign(cells, 0);
    for (std::size_t w = 0; w < workers; ++w) {
        for (std::size_t k = 0; k < cells; ++k) h.counts[k] += counts[w][k];
        h.boundary_hits += hits[w];
        h.outside += outside[w];
    }
    h.density.resize(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        h.density[k] = static_cast<double>(h.counts[k]) /
                       (static_cast<double>(config.particles) * config.histogram_mesh.volume(k));
    }
    return h;
}

SigmaSeries estimate_sigma_mass(const PdmpModel& model, const McConfig& config) {
    if (!(config.sigma_bin_width > 0.0)) {
        throw std::invalid_argument("estimate_sigma_mass: sigma_bin_width must be positive");
    }
    const auto bins = static_cast<std::size_t>(
        std::ceil(config.horizon / config.sigma_bin_width - 1e-9));
    const std::size_t workers =
        config.threads > 0 ? static_cast<std::size_t>(config.threads)
                           : std::max<std::size_t>(1, std::thread::hardware_concurrency());

    std::vector<std::vector<std::uint64_t>> counts(workers,
                                                   std::vector<std::uint64_t>(bins + 1, 0));

    run_particles(config, [&](std::size_t w, std::size_t begin, std::size_t end) {
        std::vector<double> hit_times;
        auto& local = counts[w];
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = particle_rng(config.seed, static_cast<long>(i));
            hit_times.clear();
            simulate_trajectory(model, config.horizon, rng, &hit_times);
            for (const double t : hit_times) {
                auto b = static_cast<std::size_t>(t / config.sigma_bin_width);
                if (b > bins) b = bins;
                ++local[b];
            }
        }
    });

    SigmaSeries s;
    s.bin_width = config.sigma_bin_width;
    s.hits_per_particle.assign(bins + 1, 0.0);
    std::uint64_t total = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        for (std::size_t b = 0; b <= bins; ++b) {
            s.hits_per_particle[b] += static_cast<double>(counts[w][b]);
            total += counts[w][b];
        }
    }
    for (auto& v : s.hits_per_particle) v /= static_cast<double>(config.particles);
    s.total_per_particle = static_cast<double>(total) / static_cast<double>(config.particles);
    return s;
}

}  // namespace pdmpfv
