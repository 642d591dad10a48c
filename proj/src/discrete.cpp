#include "qtraj/discrete.hpp"

#include <sstream>

#include "qtraj/random.hpp"

namespace qtraj::discrete {

KrausReport validate_kraus(const KrausModel& m) {
    KrausReport report;
    if (m.kraus_operators.empty()) {
        report.max_deviation = 1.0;
        report.message = "no Kraus operators";
        return report;
    }
    const Index d = m.dim();
    ComplexMatrix sum = ComplexMatrix::Zero(d, d);
    for (const auto& v : m.kraus_operators) {
        if (v.rows() != d || v.cols() != d || d == 0) {
            report.max_deviation = 1.0;
            report.message = "Kraus operators must all be d×d";
            return report;
        }
        sum += v.adjoint() * v;
    }
    report.max_deviation = (sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
    report.ok = report.max_deviation <= tolerances().kraus;
    std::ostringstream os;
    os << "max |sum V*V - I| = " << report.max_deviation;
    report.message = os.str();
    return report;
}

Superoperator kraus_channel(const KrausModel& m) {
    const Index d = m.dim();
    Superoperator t = Superoperator::zero(d);
    for (const auto& v : m.kraus_operators) t += Superoperator::conjugation(v);
    return t;
}

std::vector<double> step_probabilities(const DensityMatrix& theta, const KrausModel& m) {
    std::vector<double> p;
    p.reserve(m.kraus_operators.size());
    for (const auto& v : m.kraus_operators) {
        p.push_back(std::max(0.0, (v * theta.matrix() * v.adjoint()).trace().real()));
    }
    return p;
}

DiscreteChain simulate_chain(const KrausModel& m, const DensityMatrix& theta0, std::size_t steps,
                             std::uint64_t seed) {
    const KrausReport report = validate_kraus(m);
    if (!report.ok) throw InvariantError("Kraus completeness", report.message);
    if (steps < 1) throw Error("simulate_chain: need at least one step");
    if (theta0.dim() != m.dim()) throw DimensionError("simulate_chain: dimension mismatch");

    Rng rng(seed);
    DiscreteChain chain;
    chain.outcomes.reserve(steps);
    chain.states.reserve(steps + 1);
    chain.states.push_back(theta0);
    for (std::size_t n = 0; n < steps; ++n) {
        const DensityMatrix& current = chain.states.back();
        const std::vector<double> p = step_probabilities(current, m);
        double total = 0.0;
        for (double x : p) total += x;
        const double target = rng.uniform_open() * total;
        double cumulative = 0.0;
        std::size_t chosen = p.size();
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] <= 0.0) continue;
            cumulative += p[i];
            chosen = i;
            if (target < cumulative) break;
        }
        if (chosen == p.size()) {
            throw Error("simulate_chain: all outcome probabilities vanish");
        }
        const ComplexMatrix& v = m.kraus_operators[chosen];
        const ComplexMatrix image = v * current.matrix() * v.adjoint();
        const double tr = image.trace().real();
        if (!(tr > 0.0)) {
            throw Error("simulate_chain: zero-probability branch sampled");
        }
        chain.outcomes.push_back(chosen);
        chain.states.push_back(DensityMatrix::unchecked(hermitian_part(image / tr)));
    }
    return chain;
}

DensityMatrix cesaro(const DiscreteChain& chain, std::size_t n) {
    if (n == 0 || n > chain.states.size()) {
        throw Error("cesaro: N must lie in [1, number of states]");
    }
    ComplexMatrix sum = ComplexMatrix::Zero(chain.states.front().dim(), chain.states.front().dim());
    for (std::size_t i = 0; i < n; ++i) sum += chain.states[i].matrix();
    return DensityMatrix(sum / static_cast<double>(n));
}

} // namespace qtraj::discrete
