#include "qtraj/path.hpp"

#include <algorithm>
#include <cmath>

namespace qtraj {

namespace {

void require_time(const SampledPath& path, double t) {
    if (path.times.empty()) {
        throw DimensionError("SampledPath: empty path");
    }
    const double slack = 1e-12 * std::max(1.0, path.horizon());
    if (!(t >= -slack) || t > path.horizon() + slack) {
        throw DimensionError("SampledPath: time outside [0, horizon]");
    }
}

} // namespace

const DensityMatrix& SampledPath::left_limit(std::size_t node) const {
    const auto it = std::lower_bound(click_nodes.begin(), click_nodes.end(), node);
    if (it != click_nodes.end() && *it == node) {
        return pre_jump[static_cast<std::size_t>(it - click_nodes.begin())];
    }
    return states[node];
}

std::size_t SampledPath::node_at_or_before(double t) const {
    require_time(*this, t);
    const double slack = 1e-12 * std::max(1.0, horizon());
    const auto it = std::upper_bound(times.begin(), times.end(), t + slack);
    return it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
}

std::vector<ComplexMatrix> running_integral(const SampledPath& path) {
    std::vector<ComplexMatrix> out;
    out.reserve(path.size());
    if (path.times.empty()) return out;
    const Index d = path.states.front().dim();
    out.push_back(ComplexMatrix::Zero(d, d));
    for (std::size_t n = 1; n < path.size(); ++n) {
        const double h = path.times[n] - path.times[n - 1];
        out.push_back(out.back() +
                      (0.5 * h) * (path.states[n - 1].matrix() + path.left_limit(n).matrix()));
    }
    return out;
}

ComplexMatrix integral_to(const SampledPath& path, double t) {
    require_time(path, t);
    const Index d = path.states.front().dim();
    ComplexMatrix acc = ComplexMatrix::Zero(d, d);
    std::size_t n = 1;
    for (; n < path.size() && path.times[n] <= t; ++n) {
        const double h = path.times[n] - path.times[n - 1];
        acc += (0.5 * h) * (path.states[n - 1].matrix() + path.left_limit(n).matrix());
    }
    if (n < path.size() && t > path.times[n - 1]) {
        const double t0 = path.times[n - 1];
        const double s = t - t0;
        const ComplexMatrix mid = state_at(path, t);
        acc += (0.5 * s) * (path.states[n - 1].matrix() + mid);
    }
    return acc;
}

ComplexMatrix state_at(const SampledPath& path, double t) {
    const std::size_t n = path.node_at_or_before(t);
    const double t0 = path.times[n];
    if (n + 1 >= path.size() || t <= t0) {
        return path.states[n].matrix();
    }
    const double w = (t - t0) / (path.times[n + 1] - t0);
    return (1.0 - w) * path.states[n].matrix() + w * path.left_limit(n + 1).matrix();
}

std::vector<std::vector<std::size_t>> cumulative_counts(const SampledPath& path, std::size_t detectors) {
    std::vector<std::vector<std::size_t>> counts(detectors, std::vector<std::size_t>(path.size(), 0));
    std::size_t e = 0;
    std::vector<std::size_t> running(detectors, 0);
    for (std::size_t n = 0; n < path.size(); ++n) {
        while (e < path.record.size() && path.record[e].time <= path.times[n]) {
            const std::size_t det = path.record[e].detector;
            if (det >= detectors) {
                throw DimensionError("cumulative_counts: detector index out of range");
            }
            ++running[det];
            ++e;
        }
        for (std::size_t i = 0; i < detectors; ++i) counts[i][n] = running[i];
    }
    return counts;
}

} // namespace qtraj
