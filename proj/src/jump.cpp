#include "qtraj/jump.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace qtraj::jump {

namespace {

constexpr double kSurvivalSlack = 1e-9;

ComplexVector identity_row(Index d) {
    return ComplexMatrix::Identity(d, d).reshaped();
}

void check_survival_value(double s, double t) {
    if (!(s >= -kSurvivalSlack && s <= 1.0 + kSurvivalSlack)) {
        std::ostringstream os;
        os << "survival probability " << s << " at t = " << t << " outside [0, 1]";
        throw DecompositionInvalidError(os.str());
    }
}

DensityMatrix normalized(const ComplexMatrix& m, const char* where) {
    const double tr = m.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw DegenerateStateError(std::string(where) + ": state trace vanished");
    }
    return DensityMatrix::unchecked(hermitian_part(m / tr));
}

std::size_t pick(const std::vector<double>& probabilities, double u) {
    const double target = u;
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        if (probabilities[i] <= 0.0) continue;
        last_positive = i;
        cumulative += probabilities[i];
        if (target < cumulative) return i;
    }
    // Rounding left the cumulative sum just below 1.
    return last_positive;
}

} // namespace

double survival(const DensityMatrix& rho, double t, const Superoperator& L0) {
    if (!(t >= 0.0)) throw Error("survival: t must be non-negative");
    if (rho.dim() != L0.dim()) throw DimensionError("survival: dimension mismatch");
    const double s = (matrix_exp(L0.matrix(), t) * rho.matrix().reshaped()).reshaped(rho.dim(), rho.dim())
                         .trace()
                         .real();
    check_survival_value(s, t);
    return s;
}

SurvivalCurve::SurvivalCurve(const ExpEvaluator& evolution, const DensityMatrix& rho)
    : evolution_(&evolution), trace_row_(identity_row(rho.dim())), state_(rho.matrix().reshaped()) {
    if (evolution.generator().rows() != state_.size()) {
        throw DimensionError("SurvivalCurve: dimension mismatch");
    }
    if (evolution.spectral()) {
        std::tie(amplitudes_, rates_) = evolution.scalar_modes(trace_row_, state_);
    }
}

double SurvivalCurve::operator()(double t) const {
    if (evolution_->spectral()) {
        Complex acc = 0.0;
        for (Index j = 0; j < rates_.size(); ++j) {
            acc += amplitudes_(j) * std::exp(rates_(j) * t);
        }
        return acc.real();
    }
    return trace_row_.cwiseProduct(evolution_->apply(t, state_)).sum().real();
}

WaitingTime sample_waiting_time(const SurvivalCurve& survival, double u, double horizon) {
    if (!(u > 0.0 && u < 1.0)) throw Error("sample_waiting_time: u must lie in (0, 1)");
    if (!(horizon > 0.0)) throw Error("sample_waiting_time: horizon must be positive");

    double s_hi = survival(horizon);
    check_survival_value(s_hi, horizon);
    if (s_hi >= u) return NoJumpBefore{horizon};

    double lo = 0.0;
    double hi = horizon;
    double s_lo = 1.0;
    const double tol = 1e-9 * horizon;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double s = survival(mid);
        check_survival_value(s, mid);
        if (s > s_lo + kSurvivalSlack || s < s_hi - kSurvivalSlack) {
            std::ostringstream os;
            os << "survival function not monotone near t = " << mid;
            throw DecompositionInvalidError(os.str());
        }
        if (s >= u) {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
            s_hi = s;
        }
    }
    return JumpAt{0.5 * (lo + hi)};
}

WaitingTime sample_waiting_time(const DensityMatrix& rho, double u, double horizon, const Superoperator& L0) {
    const ExpEvaluator evolution(L0.matrix());
    return sample_waiting_time(SurvivalCurve(evolution, rho), u, horizon);
}

std::vector<double> jump_probabilities(const DensityMatrix& rho, std::span<const Superoperator> jumps) {
    std::vector<double> rates(jumps.size());
    double total = 0.0;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        rates[i] = std::max(0.0, jumps[i](rho).trace().real());
        total += rates[i];
    }
    if (!(total > tolerances().min_rate)) {
        throw DarkStateError("jump_probabilities: total jump rate vanishes (dark state)");
    }
    for (double& r : rates) r /= total;
    return rates;
}

DensityMatrix apply_jump(const DensityMatrix& rho, const Superoperator& jump) {
    const ComplexMatrix image = jump(rho);
    const double tr = image.trace().real();
    if (!(tr > tolerances().min_rate)) {
        throw ForbiddenJumpError("apply_jump: jump map annihilates the state");
    }
    return DensityMatrix::unchecked(hermitian_part(image / tr));
}

JumpUnraveling::JumpUnraveling(model::UnravelingDecomposition decomposition)
    : dec_(std::move(decomposition)), evolution_(dec_.L0.matrix()) {}

DensityMatrix JumpUnraveling::evolve(const DensityMatrix& theta, double s) const {
    const Index d = theta.dim();
    const ComplexVector v = evolution_.apply(s, theta.matrix().reshaped());
    return normalized(v.reshaped(d, d), "JumpUnraveling::evolve");
}

SampledPath simulate(const JumpUnraveling& unraveling, const DensityMatrix& theta0,
                     const JumpConfig& config, std::uint64_t seed) {
    if (!(config.horizon > 0.0) || !(config.grid_step > 0.0)) {
        throw Error("jump::simulate: horizon and grid_step must be positive");
    }
    if (theta0.dim() != unraveling.decomposition().dim()) {
        throw DimensionError("jump::simulate: initial state dimension mismatch");
    }
    const double horizon = config.horizon;
    const auto grid_count = static_cast<std::size_t>(std::ceil(horizon / config.grid_step - 1e-9));
    auto grid_time = [&](std::size_t k) {
        return k >= grid_count ? horizon : static_cast<double>(k) * config.grid_step;
    };
    const auto& jumps = unraveling.decomposition().jumps;

    Rng rng(seed);
    SampledPath path;
    path.times.reserve(grid_count + 2);
    path.states.reserve(grid_count + 2);
    path.times.push_back(0.0);
    path.states.push_back(theta0);

    DensityMatrix anchor = theta0;
    double t_anchor = 0.0;
    std::size_t k = 1;
    for (;;) {
        const double remaining = horizon - t_anchor;
        if (remaining <= 0.0) break;
        const SurvivalCurve curve(unraveling.no_click_evolution(), anchor);
        const WaitingTime wait = sample_waiting_time(curve, rng.uniform_open(), remaining);

        if (std::holds_alternative<NoJumpBefore>(wait)) {
            for (; k <= grid_count; ++k) {
                path.times.push_back(grid_time(k));
                path.states.push_back(unraveling.evolve(anchor, grid_time(k) - t_anchor));
            }
            break;
        }

        const double s = std::get<JumpAt>(wait).time;
        double tc = t_anchor + s;
        for (; k <= grid_count && grid_time(k) < tc; ++k) {
            path.times.push_back(grid_time(k));
            path.states.push_back(unraveling.evolve(anchor, grid_time(k) - t_anchor));
        }
        if (tc <= path.times.back()) tc = std::nextafter(path.times.back(), horizon);
        while (k <= grid_count && grid_time(k) <= tc) ++k;

        DensityMatrix pre = unraveling.evolve(anchor, s);
        const std::vector<double> p = jump_probabilities(pre, jumps);
        const std::size_t detector = pick(p, rng.uniform_open());
        DensityMatrix post = apply_jump(pre, jumps[detector]);

        if (path.record.size() >= config.max_clicks) {
            std::ostringstream os;
            os << "jump::simulate: more than " << config.max_clicks << " clicks before t = " << tc;
            throw AccumulationError(os.str());
        }
        path.click_nodes.push_back(path.times.size());
        path.times.push_back(tc);
        path.states.push_back(post);
        path.pre_jump.push_back(std::move(pre));
        path.record.push_back(DetectionEvent{tc, detector});

        anchor = std::move(post);
        t_anchor = tc;
        if (tc >= horizon) break;
    }
    return path;
}

std::pair<ComplexMatrix, double> record_density(const DetectionRecord& record, const DensityMatrix& theta0,
                                                double t, const model::UnravelingDecomposition& dec) {
    if (theta0.dim() != dec.dim()) throw DimensionError("record_density: dimension mismatch");
    double previous = 0.0;
    ComplexMatrix state = theta0.matrix();
    for (const auto& event : record) {
        if (event.time < previous || event.time > t) {
            throw Error("record_density: record out of order or beyond t");
        }
        if (event.detector >= dec.jumps.size()) {
            throw DimensionError("record_density: detector index out of range");
        }
        state = model::propagator(dec.L0, event.time - previous)(state);
        state = dec.jumps[event.detector](state);
        previous = event.time;
    }
    if (t < previous) throw Error("record_density: t precedes the last click");
    state = model::propagator(dec.L0, t - previous)(state);
    const double density = state.trace().real();
    return {std::move(state), density};
}

CountingDiagnostics counting_diagnostics(const SampledPath& path, const Superoperator& L,
                                         std::span<const Superoperator> jumps) {
    CountingDiagnostics out;
    out.times = path.times;
    out.counts = cumulative_counts(path, jumps.size());
    out.compensator.assign(jumps.size(), std::vector<double>(path.size(), 0.0));
    out.martingale.reserve(path.size());
    if (path.times.empty()) return out;

    const std::vector<ComplexMatrix> integral = running_integral(path);
    const ComplexMatrix& theta0 = path.states.front().matrix();
    for (std::size_t n = 0; n < path.size(); ++n) {
        for (std::size_t i = 0; i < jumps.size(); ++i) {
            out.compensator[i][n] = jumps[i](integral[n]).trace().real();
        }
        out.martingale.push_back(path.states[n].matrix() - theta0 - L(integral[n]));
    }
    return out;
}

} // namespace qtraj::jump
