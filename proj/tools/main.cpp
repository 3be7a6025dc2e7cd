#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pdmpfv/coefficients.hpp"
#include "pdmpfv/mc.hpp"
#include "pdmpfv/measures.hpp"
#include "pdmpfv/mesh.hpp"
#include "pdmpfv/model.hpp"
#include "pdmpfv/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pdmpfv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitSolver = 3;

struct RunSettings {
    std::string model_name = "tcp-fj";
    double X = std::numeric_limits<double>::quiet_NaN();
    double p = 0.5;
    double absorb_point = std::numeric_limits<double>::quiet_NaN();

    double h = 0.1;
    std::vector<double> edges;  // overrides h when nonempty

    double tau = std::numeric_limits<double>::quiet_NaN();
    double dt = std::numeric_limits<double>::quiet_NaN();
    double T = 10.0;
    std::string method;  // default: fixed-point, or direct for stationary runs
    double fp_tolerance = 1e-12;

    int quad_points = 64;
    std::string quad_rule = "midpoint";

    std::vector<double> snapshots;
    long mc_particles = 0;
    bool stationary = false;
    bool export_mu = false;
    bool dump_coefficients = false;

    std::string output_dir = "out";
    std::uint64_t seed = 0;
    long log_every = 0;
};

void apply_json(RunSettings& s, const json& j) {
    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (m.contains("name")) s.model_name = m.at("name").get<std::string>();
        if (m.contains("X")) s.X = m.at("X").get<double>();
        if (m.contains("p")) s.p = m.at("p").get<double>();
        if (m.contains("absorb_point")) s.absorb_point = m.at("absorb_point").get<double>();
    }
    if (j.contains("mesh")) {
        const auto& m = j.at("mesh");
        if (m.contains("h")) s.h = m.at("h").get<double>();
        if (m.contains("edges")) s.edges = m.at("edges").get<std::vector<double>>();
    }
    if (j.contains("scheme")) {
        const auto& m = j.at("scheme");
        if (m.contains("tau")) s.tau = m.at("tau").get<double>();
        if (m.contains("dt")) s.dt = m.at("dt").get<double>();
        if (m.contains("T")) s.T = m.at("T").get<double>();
        if (m.contains("method")) s.method = m.at("method").get<std::string>();
        if (m.contains("fixed_point_tolerance"))
            s.fp_tolerance = m.at("fixed_point_tolerance").get<double>();
    }
    if (j.contains("quadrature")) {
        const auto& m = j.at("quadrature");
        if (m.contains("points_per_cell")) s.quad_points = m.at("points_per_cell").get<int>();
        if (m.contains("rule")) s.quad_rule = m.at("rule").get<std::string>();
    }
    if (j.contains("snapshots")) s.snapshots = j.at("snapshots").get<std::vector<double>>();
    if (j.contains("mc") && j.at("mc").contains("particles"))
        s.mc_particles = j.at("mc").at("particles").get<long>();
    if (j.contains("stationary")) s.stationary = j.at("stationary").get<bool>();
    if (j.contains("output")) {
        const auto& m = j.at("output");
        if (m.contains("dir")) s.output_dir = m.at("dir").get<std::string>();
        if (m.contains("export_mu")) s.export_mu = m.at("export_mu").get<bool>();
        if (m.contains("dump_coefficients"))
            s.dump_coefficients = m.at("dump_coefficients").get<bool>();
    }
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("log_every")) s.log_every = j.at("log_every").get<long>();
}

void fill_defaults(RunSettings& s) {
    const TcpVariant variant = tcp_variant_from_name(s.model_name);
    if (std::isnan(s.X)) s.X = variant == TcpVariant::Infinite ? 6.0 : 2.0;
    if (std::isnan(s.tau)) s.tau = s.h;
    if (std::isnan(s.dt)) s.dt = s.stationary ? 1e6 : s.h;
    if (s.method.empty()) s.method = s.stationary ? "direct" : "fixed-point";
}

void validate(const RunSettings& s) {
    auto fail = [](const std::string& what) { throw CLI::ValidationError(what); };
    if (!(s.X > 0.0)) fail("X must be positive");
    if (!(s.p >= 0.0 && s.p <= 1.0)) fail("p must lie in [0, 1]");
    if (s.edges.empty() && !(s.h > 0.0)) fail("h must be positive");
    if (!(s.tau > 0.0)) fail("tau must be positive");
    if (!(s.dt > 0.0)) fail("dt must be positive");
    if (!(s.T >= 0.0)) fail("T must be nonnegative");
    if (s.quad_points < 1) fail("quadrature points_per_cell must be >= 1");
    if (s.method != "fixed-point" && s.method != "direct")
        fail("method must be 'fixed-point' or 'direct'");
    if (s.quad_rule != "midpoint" && s.quad_rule != "uniform")
        fail("quadrature rule must be 'midpoint' or 'uniform'");
    if (s.mc_particles < 0) fail("mc particles must be nonnegative");
}

void write_density_csv(const fs::path& path,
                       const std::vector<std::pair<double, DensityState>>& snapshots,
                       const Mesh1D& mesh) {
    std::ofstream os(path);
    os << "t,x,density\n";
    char buf[96];
    for (const auto& [t, state] : snapshots) {
        for (std::size_t k = 0; k < mesh.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t, mesh.center(k),
                          state.p[k]);
            os << buf;
        }
    }
}

void write_series_csv(const fs::path& path, const char* header, double bin_width,
                      const std::vector<double>& values) {
    std::ofstream os(path);
    os << header << "\n";
    char buf[64];
    for (std::size_t n = 0; n < values.size(); ++n) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n",
                      static_cast<double>(n) * bin_width, values[n]);
        os << buf;
    }
}

double histogram_l1(const Histogram& h, const std::vector<double>& fv, const Mesh1D& mesh) {
    double d = 0.0;
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        d += mesh.volume(k) * std::abs(h.density[k] - fv[k]);
    }
    return d;
}

struct RunMetrics {
    double residual_bump = std::numeric_limits<double>::quiet_NaN();
    double residual_const = std::numeric_limits<double>::quiet_NaN();
};

int run_single(const RunSettings& s, RunMetrics* metrics = nullptr) {
    const TcpVariant variant = tcp_variant_from_name(s.model_name);
    const DomainSpec domain{1, -kInf, s.X, 0.0};
    const Mesh1D mesh = s.edges.empty() ? build_uniform(domain, s.h) : Mesh1D(s.edges);

    double absorb = s.absorb_point;
    if (variant == TcpVariant::Finite && std::isnan(absorb)) {
        absorb = mesh.center(mesh.size() - 1);
    }
    const PdmpModel model = build_tcp_model(variant, s.X, s.p, absorb);

    QuadratureSpec quad;
    quad.points_per_cell = s.quad_points;
    quad.rule = s.quad_rule == "midpoint" ? QuadratureRule::MidpointComposite
                                          : QuadratureRule::FixedSeedUniform;
    quad.seed = s.seed;

    SchemeParams params;
    params.dt = s.dt;
    params.tau = s.tau;
    params.fixed_point_tolerance = s.fp_tolerance;
    params.method = s.method == "direct" ? SolveMethod::DirectFactorization
                                         : SolveMethod::FixedPoint;

    fs::create_directories(s.output_dir);
    const fs::path dir(s.output_dir);
    std::ofstream report(dir / "report.txt");
    report.precision(17);

    report << "model: " << s.model_name << "\n";
    report << "X: " << s.X << "\n";
    report << "p: " << s.p << "\n";
    if (variant == TcpVariant::Finite) report << "absorb_point: " << absorb << "\n";
    report << "h: " << mesh.max_diameter() << "\n";
    report << "cells: " << mesh.size() << "\n";
    report << "tau: " << s.tau << "\n";
    report << "dt: " << s.dt << "\n";
    report << "T: " << s.T << "\n";
    report << "method: " << s.method << "\n";
    report << "seed: " << s.seed << "\n";
    report << "quadrature: " << s.quad_rule << " " << s.quad_points << "\n";

    const CoefficientSet coeffs = compute_coefficients(model, mesh, s.tau, quad);
    const BalanceReport balance = verify_balance(coeffs, mesh);
    const double balance_limit = 1e-13 * balance.max_cell_volume;
    report << "balance_max_violation: " << balance.max_violation << "\n";
    report << "balance_limit: " << balance_limit << "\n";
    report << "coefficient_lost_rate: " << coeffs.total_lost_rate() << "\n";

    const HypothesisReport hyp = audit_hypotheses(model, 400, s.seed);
    {
        std::ofstream hos(dir / "hypotheses.txt");
        hos.precision(17);
        write_hypothesis_report(hyp, hos);
    }
    report << "hypothesis_h5c: " << (hyp.satisfied_h5c ? "satisfied" : "unverified") << "\n";
    report << "hypothesis_a0: " << hyp.a0 << "\n";
    report << "hypothesis_b0: " << hyp.b0 << "\n";

    if (s.dump_coefficients) {
        std::ofstream vos(dir / "v_triplets.txt");
        write_triplets(coeffs.v, vos);
        std::ofstream los(dir / "lambda_triplets.txt");
        write_triplets(coeffs.lambda_mat, los);
        std::ofstream qos(dir / "q_triplets.txt");
        write_triplets(coeffs.q_mat, qos);
    }

    bool invariants_ok = balance.max_violation <= balance_limit;

    if (s.stationary) {
        const StationaryResult st = run_stationary(model, mesh, coeffs, params);
        for (const auto& w : st.warnings) std::cerr << "warning: " << w << "\n";
        report << "stationary_steps: " << st.steps << "\n";
        report << "stationary_delta: " << st.last_delta << "\n";
        report << "stationary_mass: " << st.state.mass << "\n";
        double min_density = st.state.p.empty() ? 0.0 : st.state.p[0];
        for (const double v : st.state.p) min_density = std::min(min_density, v);
        report << "min_density: " << min_density << "\n";
        invariants_ok = invariants_ok && min_density >= 0.0 &&
                        std::abs(st.state.mass - 1.0) <= 1e-9;

        std::ofstream os(dir / "stationary_density.csv");
        os << "x,density\n";
        char buf[64];
        for (std::size_t k = 0; k < mesh.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", mesh.center(k), st.state.p[k]);
            os << buf;
        }
        report << "exit_status: " << (invariants_ok ? kExitOk : kExitInvariant) << "\n";
        return invariants_ok ? kExitOk : kExitInvariant;
    }

    TransientOptions topts;
    topts.snapshot_times = s.snapshots;
    topts.record_measures = true;
    topts.log_every = s.log_every;
    const TransientResult run = run_transient(model, mesh, coeffs, params, s.T, topts);

    report << "steps: " << run.measures.steps() << "\n";
    report << "final_mass: " << run.final_state.mass << "\n";
    report << "max_mass_error: " << run.max_mass_error << "\n";
    report << "min_density: " << run.min_density << "\n";
    report << "lost_mass: " << run.lost_mass << "\n";
    report << "fp_monotone: " << (run.fp_monotone_all ? "yes" : "no") << "\n";

    double sigma_total = 0.0;
    for (const double v : run.sigma_step_mass) sigma_total += v;
    report << "sigma_total: " << sigma_total << "\n";

    write_density_csv(dir / "density.csv", run.snapshots, mesh);
    write_series_csv(dir / "sigma_series.csv", "t,sigma_mass", s.dt, run.sigma_step_mass);

    // weak-residual diagnostic with the shipped bump and an x-constant probe
    if (run.measures.steps() > 0) {
        const TestFunction bump =
            make_bump_test_function(0.5 * s.X, 0.4 * s.X, 0.4 * s.T, 0.9 * s.T);
        const TestFunction flat = make_time_only_test_function(1.0, 0.4 * s.T, 0.9 * s.T);
        const double res_bump =
            kolmogorov_residual(run.measures, run.final_state, model, bump, s.T);
        const double res_flat =
            kolmogorov_residual(run.measures, run.final_state, model, flat, s.T);
        report << "residual_bump: " << res_bump << "\n";
        report << "residual_const: " << res_flat << "\n";
        if (metrics) {
            metrics->residual_bump = res_bump;
            metrics->residual_const = res_flat;
        }
    }

    if (s.export_mu) {
        std::ofstream mos(dir / "mu_atoms.csv");
        write_mu_atoms_csv(run.measures, mos);
        std::ofstream sos(dir / "sigma_atoms.csv");
        write_sigma_atoms_csv(run.measures, sos);
    }

    invariants_ok = invariants_ok && run.min_density >= 0.0 && run.max_mass_error <= 1e-9 &&
                    run.fp_monotone_all;

    if (s.mc_particles > 0) {
        McConfig mc;
        mc.particles = s.mc_particles;
        mc.horizon = s.T;
        mc.seed = s.seed;
        mc.histogram_mesh = mesh;
        mc.sigma_bin_width = s.dt;
        const Histogram hist = estimate_density(model, mc);
        const SigmaSeries hits = estimate_sigma_mass(model, mc);

        {
            std::ofstream os(dir / "mc_histogram.csv");
            os << "x,density,count\n";
            char buf[96];
            for (std::size_t k = 0; k < mesh.size(); ++k) {
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%llu\n", mesh.center(k),
                              hist.density[k],
                              static_cast<unsigned long long>(hist.counts[k]));
                os << buf;
            }
        }
        write_series_csv(dir / "mc_hits.csv", "t,hits_per_particle", hits.bin_width,
                         hits.hits_per_particle);

        const double l1 = histogram_l1(hist, run.final_state.p, mesh);
        report << "mc_particles: " << s.mc_particles << "\n";
        report << "mc_l1_distance: " << l1 << "\n";
        report << "mc_outside: " << hist.outside << "\n";
        report << "mc_hits_per_particle: "
               << static_cast<double>(hist.boundary_hits) /
                      static_cast<double>(hist.particles)
               << "\n";
        invariants_ok = invariants_ok && hist.outside == 0;
    }

    report << "exit_status: " << (invariants_ok ? kExitOk : kExitInvariant) << "\n";
    return invariants_ok ? kExitOk : kExitInvariant;
}

int run_figure1_preset(const RunSettings& base) {
    struct ParamSet {
        double h, tau, dt;
    };
    const std::vector<ParamSet> sets = {
        {0.2, 0.2, 0.2}, {0.1, 0.1, 0.1}, {0.01, 0.01, 0.01}, {0.01, 0.005, 0.01}};
    const std::vector<std::string> models = {"tcp-i", "tcp-f", "tcp-fj"};

    int worst = kExitOk;
    fs::create_directories(base.output_dir);
    std::ofstream table(fs::path(base.output_dir) / "residual_table.txt");
    table << "model        h       tau     dt      residual_bump   residual_const\n";
    for (const auto& name : models) {
        for (const auto& set : sets) {
            RunSettings s = base;
            s.model_name = name;
            s.X = name == "tcp-i" ? 6.0 : 2.0;
            s.p = 0.5;
            s.h = set.h;
            s.tau = set.tau;
            s.dt = set.dt;
            s.T = 10.0;
            s.method = "direct";
            s.snapshots = {10.0};
            s.absorb_point = std::numeric_limits<double>::quiet_NaN();
            char sub[128];
            std::snprintf(sub, sizeof(sub), "%s_h%g_tau%g_dt%g", name.c_str(), set.h,
                          set.tau, set.dt);
            s.output_dir = (fs::path(base.output_dir) / sub).string();
            std::cerr << "figure1: " << sub << "\n";
            RunMetrics metrics;
            worst = std::max(worst, run_single(s, &metrics));
            char row[192];
            std::snprintf(row, sizeof(row), "%-12s %-7g %-7g %-7g %-15.6g %-15.6g\n",
                          name.c_str(), set.h, set.tau, set.dt, metrics.residual_bump,
                          metrics.residual_const);
            table << row;
        }
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    RunSettings settings;
    std::string config_path;
    std::string preset;
    std::string snapshots_arg;

    // a config file provides defaults; explicit flags override it
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    }
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) {
            std::cerr << "error: cannot open config file " << config_path << "\n";
            return kExitUsage;
        }
        try {
            json j;
            is >> j;
            apply_json(settings, j);
        } catch (const std::exception& e) {
            std::cerr << "error: config parse failed: " << e.what() << "\n";
            return kExitUsage;
        }
    }

    CLI::App app{"Density-evolution solver for piecewise deterministic Markov "
                 "processes with forced boundary jumps"};
    app.set_help_flag("--help", "print usage");  // frees -h/--h for the mesh width
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--model", settings.model_name, "model name: tcp-i, tcp-f, tcp-fj");
    app.add_option("--X", settings.X, "upper bound of the state space");
    app.add_option("--p", settings.p, "forced-jump atom weight (tcp-fj)");
    app.add_option("--absorb-point", settings.absorb_point,
                   "tcp-f return point (default: center of the last cell)");
    app.add_option("--h", settings.h, "uniform mesh width");
    app.add_option("--tau", settings.tau, "transport window (default: h)");
    app.add_option("--dt", settings.dt, "time step (default: h)");
    app.add_option("--T", settings.T, "horizon");
    app.add_option("--method", settings.method, "solver: fixed-point or direct");
    app.add_option("--seed", settings.seed, "seed for sampling and Monte Carlo");
    app.add_option("--output-dir", settings.output_dir, "output directory");
    app.add_option("--preset", preset, "study preset: figure1");
    app.add_option("--mc-particles", settings.mc_particles,
                   "trajectory-oracle particle count (0 disables)");
    app.add_option("--snapshots", snapshots_arg, "comma-separated snapshot times");
    app.add_option("--quad-points", settings.quad_points, "quadrature points per cell");
    app.add_option("--quad-rule", settings.quad_rule, "midpoint or uniform");
    app.add_option("--log-every", settings.log_every, "progress line every N steps");
    app.add_flag("--stationary", settings.stationary, "solve for the stationary density");
    app.add_flag("--export-mu", settings.export_mu, "export measure atom lists");
    app.add_flag("--dump-coefficients", settings.dump_coefficients,
                 "export coefficient matrices as triplets");

    try {
        app.parse(argc, argv);
        if (!snapshots_arg.empty()) {
            settings.snapshots.clear();
            std::size_t pos = 0;
            while (pos < snapshots_arg.size()) {
                std::size_t next = snapshots_arg.find(',', pos);
                if (next == std::string::npos) next = snapshots_arg.size();
                settings.snapshots.push_back(std::stod(snapshots_arg.substr(pos, next - pos)));
                pos = next + 1;
            }
        }
        fill_defaults(settings);
        validate(settings);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (!preset.empty()) {
            if (preset != "figure1") {
                std::cerr << "error: unknown preset " << preset << "\n";
                return kExitUsage;
            }
            return run_figure1_preset(settings);
        }
        return run_single(settings);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}
