// jump.hpp - continuous-time jump unraveling
//
// Between clicks the unnormalized state follows e^{tL0}; the click time is
// drawn by inverting the survival function tr e^{tL0}ρ (bisection on the
// exact curve, no time stepping), and the detector i with probability
// tr J_i(ρ) / Σ_j tr J_j(ρ).

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "qtraj/model.hpp"
#include "qtraj/path.hpp"
#include "qtraj/random.hpp"

namespace qtraj::jump {

struct JumpAt {
    double time;
};
struct NoJumpBefore {
    double horizon;
};
using WaitingTime = std::variant<JumpAt, NoJumpBefore>;

// tr(e^{tL0} ρ), recomputed from matrix_exp.
double survival(const DensityMatrix& rho, double t, const Superoperator& L0);

// Survival curve of a fixed state, evaluated from cached modes when L0 has a
// well-conditioned eigendecomposition.
class SurvivalCurve {
public:
    SurvivalCurve(const ExpEvaluator& evolution, const DensityMatrix& rho);
    double operator()(double t) const;

private:
    const ExpEvaluator* evolution_;
    ComplexVector trace_row_;
    ComplexVector state_;
    ComplexVector amplitudes_;
    ComplexVector rates_;
};

WaitingTime sample_waiting_time(const SurvivalCurve& survival, double u, double horizon);
WaitingTime sample_waiting_time(const DensityMatrix& rho, double u, double horizon, const Superoperator& L0);

// p_i = tr J_i(ρ) / Σ_j tr J_j(ρ); throws DarkStateError if all rates vanish.
std::vector<double> jump_probabilities(const DensityMatrix& rho, std::span<const Superoperator> jumps);

// J(ρ)/tr J(ρ); throws ForbiddenJumpError if tr J(ρ) vanishes.
DensityMatrix apply_jump(const DensityMatrix& rho, const Superoperator& jump);

struct JumpConfig {
    double horizon = 1.0;
    double grid_step = 0.05;
    std::size_t max_clicks = 10'000'000;
};

// Decomposition plus the caches simulate needs; build once per ensemble.
class JumpUnraveling {
public:
    explicit JumpUnraveling(model::UnravelingDecomposition decomposition);

    const model::UnravelingDecomposition& decomposition() const noexcept { return dec_; }
    const ExpEvaluator& no_click_evolution() const noexcept { return evolution_; }
    std::size_t detectors() const noexcept { return dec_.jumps.size(); }

    // Normalized e^{sL0}Θ.
    DensityMatrix evolve(const DensityMatrix& theta, double s) const;

private:
    model::UnravelingDecomposition dec_;
    ExpEvaluator evolution_;
};

SampledPath simulate(const JumpUnraveling& unraveling, const DensityMatrix& theta0,
                     const JumpConfig& config, std::uint64_t seed);

// ϑ_t = e^{(t-t_n)L0} J_{i_n} ⋯ J_{i_1} e^{t_1 L0} θ0 and its trace, the
// probability density of the record on [0, t].
std::pair<ComplexMatrix, double> record_density(const DetectionRecord& record, const DensityMatrix& theta0,
                                                double t, const model::UnravelingDecomposition& dec);

struct CountingDiagnostics {
    std::vector<double> times;
    std::vector<std::vector<std::size_t>> counts;  // counts[i][n] = N^i at node n
    std::vector<std::vector<double>> compensator;  // ∫₀^{t_n} tr J_i(Θ_u) du
    std::vector<ComplexMatrix> martingale;         // M_t = Θ_t - θ0 - ∫₀^t L(Θ_s) ds

    double compensated(std::size_t detector, std::size_t node) const {
        return static_cast<double>(counts[detector][node]) - compensator[detector][node];
    }
};

CountingDiagnostics counting_diagnostics(const SampledPath& path, const Superoperator& L,
                                         std::span<const Superoperator> jumps);

} // namespace qtraj::jump
