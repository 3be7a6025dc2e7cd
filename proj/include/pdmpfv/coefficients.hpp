#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pdmpfv/mesh.hpp"
#include "pdmpfv/model.hpp"

namespace pdmpfv {

enum class QuadratureRule {
    MidpointComposite,  // deterministic, bitwise reproducible
    FixedSeedUniform,   // random points, deterministic given the seed
};

/// Per-cell sample set used for all coefficient integrals. The same point
/// set feeds the transport and boundary-exit integrals of a cell, which is
/// what makes the per-cell balance identity exact.
struct QuadratureSpec {
    int points_per_cell = 64;
    QuadratureRule rule = QuadratureRule::MidpointComposite;
    std::uint64_t seed = 0;
};

/// Row-compressed sparse nonnegative matrix over cell indices.
struct SparseRows {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows;

    std::size_t size() const { return rows.size(); }
    double row_sum(std::size_t k) const;
    double value(std::size_t k, std::size_t l) const;
    std::size_t nonzeros() const;

    /// Sorts each row by column, merges duplicates, drops entries with
    /// magnitude below `threshold`.
    void compress(double threshold);
};

/// One boundary-exiting quadrature point of a cell: the boundary image
/// phi(x, alpha(x)) and its per-unit-time mass share w/tau.
struct BoundarySample {
    double location;
    double rate;
};

/// Finite-volume coefficients for a fixed (model, mesh, tau):
///   v        — per-unit-time transport flux between cells,
///   lambda_*  — interior jump intensities (matrix, row sums, totals),
///   q_vec    — per-unit-time boundary exit intensity per cell,
///   q_mat    — its redistribution through the boundary kernel.
///
/// Every quadrature point of a cell contributes to exactly one of
/// {transport row, boundary exit, flow_lost}, so
///   tau * (sum_L v[K][L] + q_vec[K] + flow_lost[K]) == |K|
/// holds up to floating-point summation error for every cell K.
/// Mass leaving the truncated interval is never redistributed; it lands in
/// the *_lost diagnostics.
struct CoefficientSet {
    double tau = 0.0;
    std::vector<double> volumes;

    SparseRows v;
    SparseRows lambda_mat;
    std::vector<double> lambda_vec;
    std::vector<double> q_vec;
    SparseRows q_mat;

    std::vector<double> flow_lost;          // transport images below the truncation
    std::vector<double> q_kernel_lost;      // boundary-kernel mass outside the mesh
    std::vector<double> lambda_kernel_lost; // interior-kernel mass outside the mesh

    std::vector<std::vector<BoundarySample>> boundary_samples;

    std::size_t cells() const { return volumes.size(); }

    /// Per-unit-time rate at which mass leaves the computation from cell K.
    double lost_rate(std::size_t k) const {
        return flow_lost[k] + q_kernel_lost[k] + lambda_kernel_lost[k];
    }
    double total_lost_rate() const;
};

/// Assembles the coefficients by per-cell quadrature. Entries with magnitude
/// below 1e-15 are dropped after assembly. Assembly is parallel over cells
/// and bitwise deterministic (midpoint rule) or deterministic given the seed
/// (uniform rule).
///
/// Interior kernels with a density part cost O(points * cells) per cell; the
/// shipped models use atomic interior kernels.
CoefficientSet compute_coefficients(const PdmpModel& model, const Mesh1D& mesh,
                                    double tau, const QuadratureSpec& quad = {});

struct BalanceReport {
    double max_violation = 0.0;   // max_K |tau*(sum_L v_KL + q_K + lost_K) - |K||
    std::size_t argmax_cell = 0;
    double max_cell_volume = 0.0;
    double total_flow_lost = 0.0;
};

/// Checks the per-cell balance identity; the violation must stay within
/// floating summation error (<= 1e-13 * max |K|).
BalanceReport verify_balance(const CoefficientSet& coeffs, const Mesh1D& mesh);

/// Writes "row col value" triplets, one per line, full precision.
void write_triplets(const SparseRows& m, std::ostream& os);

}  // namespace pdmpfv
