#include "pdmpfv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdmpfv {

Mesh1D::Mesh1D(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2) {
        throw std::invalid_argument("Mesh1D: need at least two edges");
    }
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
        if (!(edges_[i] < edges_[i + 1])) {
            throw std::invalid_argument("Mesh1D: edges must be strictly increasing");
        }
    }
}

double Mesh1D::max_diameter() const {
    double h = 0.0;
    for (std::size_t i = 0; i < size(); ++i) h = std::max(h, volume(i));
    return h;
}

std::size_t Mesh1D::locate(double x) const {
    if (empty() || x < edges_.front() || x >= edges_.back()) return npos;
    // first edge strictly greater than x, minus one
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

Mesh1D build_uniform(const DomainSpec& domain, double h) {
    domain.validate();
    const double width = domain.width();
    if (!(h > 0.0)) throw std::invalid_argument("build_uniform: h must be positive");
    if (h >= width) throw std::invalid_argument("build_uniform: h must be smaller than the domain width");

    const double ratio = width / h;
    auto cells = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    const bool exact = std::abs(ratio - static_cast<double>(cells)) <= 1e-9 * ratio ||
                       std::abs(width - static_cast<double>(cells) * h) <= 1e-9;

    std::vector<double> edges;
    edges.reserve(cells + 2);
    for (std::size_t i = 0; i < cells; ++i) {
        edges.push_back(domain.truncation_lower + static_cast<double>(i) * h);
    }
    if (!exact) {
        // shortened last cell covering the remainder
        edges.push_back(domain.truncation_lower + static_cast<double>(cells) * h);
    }
    edges.push_back(domain.upper);
    return Mesh1D(std::move(edges));
}

}  // namespace pdmpfv
