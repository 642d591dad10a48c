// path.hpp - sampled quantum trajectories and quadrature along them

#pragma once

#include <cstddef>
#include <vector>

#include "qtraj/numlin.hpp"

namespace qtraj {

struct DetectionEvent {
    double time = 0.0;
    std::size_t detector = 0;  // 0-based; files and messages use 1-based indices
};

using DetectionRecord = std::vector<DetectionEvent>;

// States on a strictly increasing time grid that starts at 0. Paths are
// right-continuous: at a click node states[n] is the post-jump state and the
// left limit is kept in pre_jump, so quadrature never straddles a jump.
struct SampledPath {
    std::vector<double> times;
    std::vector<DensityMatrix> states;
    DetectionRecord record;
    std::vector<std::size_t> click_nodes;     // node index of record[i]
    std::vector<DensityMatrix> pre_jump;      // left limit at click_nodes[i]

    std::size_t size() const noexcept { return times.size(); }
    double horizon() const { return times.empty() ? 0.0 : times.back(); }
    const DensityMatrix& left_limit(std::size_t node) const;
    // Index of the last node with time ≤ t (within a relative 1e-12 slack).
    std::size_t node_at_or_before(double t) const;
};

// Trapezoid ∫₀^{t_n} Θ ds at every node n.
std::vector<ComplexMatrix> running_integral(const SampledPath& path);

// Trapezoid ∫₀^t Θ ds for any t in [0, horizon]; inside a cell the state is
// interpolated linearly between the node value and the next left limit.
ComplexMatrix integral_to(const SampledPath& path, double t);

// Θ_t at a node, or the linear interpolation used by integral_to between nodes.
ComplexMatrix state_at(const SampledPath& path, double t);

// Cumulative click counts per detector at every node: counts[i][n].
std::vector<std::vector<std::size_t>> cumulative_counts(const SampledPath& path, std::size_t detectors);

} // namespace qtraj
