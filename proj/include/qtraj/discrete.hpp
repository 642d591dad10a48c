// discrete.hpp - discrete-time unraveling of a Kraus channel T(ρ) = Σ V_i ρ V_i*

#pragma once

#include <cstdint>
#include <vector>

#include "qtraj/numlin.hpp"

namespace qtraj::discrete {

struct KrausModel {
    std::vector<ComplexMatrix> kraus_operators;

    Index dim() const { return kraus_operators.empty() ? 0 : kraus_operators.front().rows(); }
};

struct KrausReport {
    bool ok = false;
    double max_deviation = 0.0;  // max entry of |Σ V_i* V_i - I|
    std::string message;
};

KrausReport validate_kraus(const KrausModel& m);

// The channel T as a superoperator.
Superoperator kraus_channel(const KrausModel& m);

// p_i = tr(V_i Θ V_i*).
std::vector<double> step_probabilities(const DensityMatrix& theta, const KrausModel& m);

struct DiscreteChain {
    std::vector<std::size_t> outcomes;  // ω_1..ω_N, 0-based
    std::vector<DensityMatrix> states;  // Θ_0..Θ_N
};

// Throws InvariantError if the model fails validate_kraus.
DiscreteChain simulate_chain(const KrausModel& m, const DensityMatrix& theta0, std::size_t steps,
                             std::uint64_t seed);

// (1/N) Σ_{n<N} Θ_n.
DensityMatrix cesaro(const DiscreteChain& chain, std::size_t n);

} // namespace qtraj::discrete
