#include "pdmpfv/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#include "pdmpfv/numerics.hpp"

namespace pdmpfv {

double SparseRows::row_sum(std::size_t k) const {
    double s = 0.0;
    for (const auto& [col, val] : rows[k]) s += val;
    return s;
}

double SparseRows::value(std::size_t k, std::size_t l) const {
    for (const auto& [col, val] : rows[k]) {
        if (col == l) return val;
    }
    return 0.0;
}

std::size_t SparseRows::nonzeros() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.size();
    return n;
}

void SparseRows::compress(double threshold) {
    for (auto& row : rows) {
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::pair<std::uint32_t, double>> merged;
        merged.reserve(row.size());
        for (const auto& [col, val] : row) {
            if (!merged.empty() && merged.back().first == col) {
                merged.back().second += val;
            } else {
                merged.emplace_back(col, val);
            }
        }
        std::erase_if(merged, [threshold](const auto& e) {
            return std::abs(e.second) < threshold;
        });
        row = std::move(merged);
    }
}

double CoefficientSet::total_lost_rate() const {
    double s = 0.0;
    for (std::size_t k = 0; k < cells(); ++k) s += lost_rate(k);
    return s;
}

namespace {

constexpr double kDropThreshold = 1e-15;

void accumulate(std::vector<std::pair<std::uint32_t, double>>& row,
                std::uint32_t col, double val) {
    for (auto& e : row) {
        if (e.first == col) {
            e.second += val;
            return;
        }
    }
    row.emplace_back(col, val);
}

/// Kernel mass per mesh cell from a fixed source, plus the mass that falls
/// outside the mesh. Used for the boundary-kernel rows, where the source
/// (the boundary image) repeats across quadrature points.
struct KernelRow {
    std::vector<std::pair<std::uint32_t, double>> entries;
    double lost = 0.0;
};

KernelRow kernel_row_on_mesh(const MixtureKernel& kernel, double source,
                             const Mesh1D& mesh) {
    KernelRow out;
    for (const auto& atom : kernel.atoms) {
        const double y = atom.location(source);
        const double w = atom.weight(source);
        if (w == 0.0) continue;
        const std::size_t idx = mesh.locate(y);
        if (idx == Mesh1D::npos) {
            out.lost += w;
        } else {
            accumulate(out.entries, static_cast<std::uint32_t>(idx), w);
        }
    }
    if (kernel.density_part) {
        double placed = 0.0;
        for (std::size_t l = 0; l < mesh.size(); ++l) {
            const double m =
                kernel_mass_on_interval(MixtureKernel{{}, kernel.density_part},
                                        source, mesh.left(l), mesh.right(l));
            if (m > 0.0) {
                accumulate(out.entries, static_cast<std::uint32_t>(l), m);
                placed += m;
            }
        }
        out.lost += std::max(0.0, kernel.density_part->mass(source) - placed);
    }
    return out;
}

}  // namespace

CoefficientSet compute_coefficients(const PdmpModel& model, const Mesh1D& mesh,
                                    double tau, const QuadratureSpec& quad) {
    if (!(tau > 0.0)) throw std::invalid_argument("compute_coefficients: tau must be positive");
    if (quad.points_per_cell < 1) {
        throw std::invalid_argument("compute_coefficients: need at least one point per cell");
    }

    const std::size_t n = mesh.size();
    CoefficientSet out;
    out.tau = tau;
    out.volumes.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.volumes[k] = mesh.volume(k);
    out.v.rows.resize(n);
    out.lambda_mat.rows.resize(n);
    out.lambda_vec.assign(n, 0.0);
    out.q_vec.assign(n, 0.0);
    out.q_mat.rows.resize(n);
    out.flow_lost.assign(n, 0.0);
    out.q_kernel_lost.assign(n, 0.0);
    out.lambda_kernel_lost.assign(n, 0.0);
    out.boundary_samples.resize(n);

    const int m = quad.points_per_cell;

    parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
        std::vector<double> points(static_cast<std::size_t>(m));
        std::vector<std::pair<double, KernelRow>> q_row_cache;

        for (std::size_t k = begin; k < end; ++k) {
            const double a = mesh.left(k), b = mesh.right(k);
            const double vol = mesh.volume(k);
            const double w = vol / static_cast<double>(m);
            const double w_rate = w / tau;

            if (quad.rule == QuadratureRule::MidpointComposite) {
                for (int i = 0; i < m; ++i) {
                    points[static_cast<std::size_t>(i)] =
                        a + (static_cast<double>(i) + 0.5) * (b - a) / static_cast<double>(m);
                }
            } else {
                std::mt19937_64 rng(splitmix64(quad.seed ^ (0xC2B2AE3D27D4EB4FULL * (k + 1))));
                std::uniform_real_distribution<double> dist(a, b);
                for (int i = 0; i < m; ++i) points[static_cast<std::size_t>(i)] = dist(rng);
            }

            q_row_cache.clear();
            auto& v_row = out.v.rows[k];
            auto& l_row = out.lambda_mat.rows[k];
            auto& q_row = out.q_mat.rows[k];

            for (const double x : points) {
                const double alpha = model.alpha.evaluate(x);

                if (alpha > tau) {
                    // transported by the flow over the window
                    const double y = model.flow.evaluate(x, tau);
                    std::size_t idx = mesh.locate(y);
                    if (idx == Mesh1D::npos && y >= mesh.upper()) {
                        // alpha > tau guarantees the image is interior; a
                        // roundoff overshoot of the last edge goes to the
                        // last cell rather than being dropped
                        idx = n - 1;
                    }
                    if (idx == Mesh1D::npos) {
                        out.flow_lost[k] += w_rate;
                    } else {
                        accumulate(v_row, static_cast<std::uint32_t>(idx), w_rate);
                    }
                } else {
                    // exits through the boundary within the window
                    out.q_vec[k] += w_rate;
                    const double z = model.flow.evaluate(x, alpha);
                    out.boundary_samples[k].push_back(BoundarySample{z, w_rate});

                    const KernelRow* row = nullptr;
                    for (const auto& [src, cached] : q_row_cache) {
                        if (src == z) {
                            row = &cached;
                            break;
                        }
                    }
                    if (row == nullptr) {
                        q_row_cache.emplace_back(z, kernel_row_on_mesh(model.boundary_kernel, z, mesh));
                        row = &q_row_cache.back().second;
                    }
                    for (const auto& [col, mass] : row->entries) {
                        accumulate(q_row, col, w_rate * mass);
                    }
                    out.q_kernel_lost[k] += w_rate * row->lost;
                }

                // interior jump intensity, independent of the branch above
                const double lam = model.rate(x);
                if (lam > 0.0) {
                    out.lambda_vec[k] += w * lam;
                    double placed = 0.0;
                    for (const auto& atom : model.interior_kernel.atoms) {
                        const double y = atom.location(x);
                        const double aw = atom.weight(x);
                        if (aw == 0.0) continue;
                        const std::size_t idx = mesh.locate(y);
                        if (idx == Mesh1D::npos) continue;
                        accumulate(l_row, static_cast<std::uint32_t>(idx), w * lam * aw);
                        placed += aw;
                    }
                    if (model.interior_kernel.density_part) {
                        for (std::size_t l = 0; l < n; ++l) {
                            const double mass = kernel_mass_on_interval(
                                MixtureKernel{{}, model.interior_kernel.density_part}, x,
                                mesh.left(l), mesh.right(l));
                            if (mass > 0.0) {
                                accumulate(l_row, static_cast<std::uint32_t>(l), w * lam * mass);
                                placed += mass;
                            }
                        }
                    }
                    const double total = kernel_total_mass(model.interior_kernel, x);
                    if (total > placed) {
                        out.lambda_kernel_lost[k] += w * lam * (total - placed);
                    }
                }
            }
        }
    });

    out.v.compress(kDropThreshold);
    out.lambda_mat.compress(kDropThreshold);
    out.q_mat.compress(kDropThreshold);
    return out;
}

BalanceReport verify_balance(const CoefficientSet& coeffs, const Mesh1D& mesh) {
    BalanceReport rep;
    for (std::size_t k = 0; k < coeffs.cells(); ++k) {
        rep.max_cell_volume = std::max(rep.max_cell_volume, mesh.volume(k));
        const double out_rate = coeffs.v.row_sum(k) + coeffs.q_vec[k] + coeffs.flow_lost[k];
        const double violation = std::abs(coeffs.tau * out_rate - mesh.volume(k));
        if (violation > rep.max_violation) {
            rep.max_violation = violation;
            rep.argmax_cell = k;
        }
        rep.total_flow_lost += coeffs.flow_lost[k];
    }
    return rep;
}

void write_triplets(const SparseRows& m, std::ostream& os) {
    char buf[64];
    for (std::size_t k = 0; k < m.rows.size(); ++k) {
        for (const auto& [col, val] : m.rows[k]) {
            std::snprintf(buf, sizeof(buf), "%zu %u %.17g\n", k, col, val);
            os << buf;
        }
    }
}

}  // namespace pdmpfv
