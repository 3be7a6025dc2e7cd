#pragma once

#include <cstddef>
#include <vector>

#include "pdmpfv/domain.hpp"

namespace pdmpfv {

/// Partition of the truncated state space into half-open cells
/// [edges[i], edges[i+1]). Cells are half-open so that point location is a
/// total function on [lower, upper); the point `upper` itself lies outside.
/// Immutable after construction.
class Mesh1D {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// Empty mesh (zero cells).
    Mesh1D() = default;

    /// Mesh from an explicit edge list; edges must be strictly increasing
    /// with at least two entries.
    explicit Mesh1D(std::vector<double> edges);

    std::size_t size() const { return edges_.empty() ? 0 : edges_.size() - 1; }
    bool empty() const { return size() == 0; }

    double left(std::size_t i) const { return edges_[i]; }
    double right(std::size_t i) const { return edges_[i + 1]; }
    double center(std::size_t i) const { return 0.5 * (edges_[i] + edges_[i + 1]); }
    double volume(std::size_t i) const { return edges_[i + 1] - edges_[i]; }

    double lower() const { return edges_.front(); }
    double upper() const { return edges_.back(); }

    /// Largest cell diameter.
    double max_diameter() const;
    double total_volume() const { return edges_.back() - edges_.front(); }

    /// Index i with edges[i] <= x < edges[i+1]; npos if x lies outside
    /// [lower, upper).
    std::size_t locate(double x) const;

    const std::vector<double>& edges() const { return edges_; }

private:
    std::vector<double> edges_;
};

/// Uniform mesh of width h over [domain.truncation_lower, domain.upper).
/// If h does not divide the interval within 1e-9 the last cell is shortened.
/// Throws std::invalid_argument for h <= 0 or h >= interval width.
Mesh1D build_uniform(const DomainSpec& domain, double h);

}  // namespace pdmpfv
