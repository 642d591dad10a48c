// ergodic.hpp - mean projector, equilibrium space and pathwise ergodic statistics
//
// The mean projector P = lim (1/t)∫₀ᵗ e^{sL} ds is computed two independent
// ways: as the spectral projector of L onto the eigenvalue 0 (decaying modes
// vanish, purely imaginary modes average out), and by exact quadrature of the
// semigroup through the block exponential exp(t [[L, I], [0, 0]]). For a
// channel T the same roles are played by the eigenvalue 1 and (1/N)Σ Tⁿ.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtraj/discrete.hpp"
#include "qtraj/path.hpp"

namespace qtraj::ergodic {

enum class ProjectorMethod { spectral, quadrature, power_average };

const char* to_string(ProjectorMethod m);

struct MeanProjector {
    Superoperator P;
    ProjectorMethod method = ProjectorMethod::spectral;
    bool discrete = false;
    double idempotence_residual = 0.0;  // max |P² - P|
    double invariance_residual = 0.0;   // max |P T - P|, |T P - P| over sampled T
    double spectral_gap = 0.0;          // slowest decay rate (continuous) or 1 - |λ| (discrete)

    bool satisfies_invariants(double tol = 1e-8) const {
        return idempotence_residual <= tol && invariance_residual <= tol;
    }
};

inline constexpr double kQuadratureHorizon = 1e3;
inline constexpr std::size_t kPowerAverageTerms = 100'000;

// Continuous time. The spectral method falls back to quadrature (and says so
// in `method`) when the eigenproblem is near-defective.
MeanProjector mean_projector(const Superoperator& L, ProjectorMethod method = ProjectorMethod::spectral,
                             double quadrature_horizon = kQuadratureHorizon);

// Discrete time, from the channel T itself.
MeanProjector discrete_mean_projector(const Superoperator& T, ProjectorMethod method = ProjectorMethod::spectral,
                                      std::size_t power_terms = kPowerAverageTerms);

struct EquilibriumBasis {
    std::vector<DensityMatrix> states;  // linearly independent, spanning the fixed space
    bool unique = false;
};

EquilibriumBasis equilibrium_basis(const MeanProjector& P);

// (1/t)∫₀ᵗ Θ ds by trapezoid, repaired to a density matrix.
DensityMatrix time_average(const SampledPath& path, double t);

// P applied to the final state: the finite-horizon estimate of Θ∞.
DensityMatrix theta_infinity(const SampledPath& path, const MeanProjector& P);

// ‖(1/t)∫₀ᵗ L(Θ_s) ds‖ in operator norm.
double generator_average_residual(const SampledPath& path, const Superoperator& L, double t);

// ------------------------------ ensemble report ------------------------------

struct ReportThresholds {
    double distance = 0.05;           // trace distance, time average vs Θ∞
    double distance_fraction = 0.95;  // required fraction of paths within `distance`
    double residual = 0.05;           // generator-average residual at the horizon
    double residual_fraction = 0.95;
    double sigma = 3.0;               // standard errors allowed in zero-mean tests
    double zero_se_floor = 1e-9;      // absolute slack added to sigma·SE
    std::vector<double> martingale_times;
};

struct ReportContext {
    MeanProjector projector;
    DensityMatrix theta0;
    // L for continuous paths; T - id for chains (so the same residual and
    // martingale formulas apply with sums in place of integrals).
    Superoperator generator;
    std::vector<Superoperator> jumps;  // empty unless counting diagnostics apply
    ReportThresholds thresholds;
};

struct Checkpoint {
    double time = 0.0;
    ComplexMatrix projected_increment;  // P(Θ_t) - P(θ0)
    ComplexMatrix martingale;           // Θ_t - θ0 - ∫₀ᵗ L(Θ) (or Σ_{m<n} (T-1)Θ_m)
    std::vector<double> compensated_counts;
};

struct PathStatistics {
    DensityMatrix time_average;
    DensityMatrix theta_infinity;
    double distance = 0.0;
    double residual = 0.0;
    std::vector<Checkpoint> checkpoints;
};

PathStatistics path_statistics(const SampledPath& path, const ReportContext& ctx);
PathStatistics chain_statistics(const discrete::DiscreteChain& chain, const ReportContext& ctx);

struct Statistic {
    std::string name;
    double value = 0.0;
    std::optional<double> standard_error;
    std::optional<double> threshold;
    bool pass = true;
};

struct EquilibriumReport {
    std::size_t paths = 0;
    std::vector<Statistic> statistics;
    bool pass = true;

    const Statistic* find(const std::string& name) const;
};

EquilibriumReport ergodic_report(std::span<const PathStatistics> stats, const ReportContext& ctx);
EquilibriumReport ergodic_report(std::span<const SampledPath> paths, const ReportContext& ctx);

// Mean and standard error of the mean (sample standard deviation / √n).
std::pair<double, double> mean_and_standard_error(std::span<const double> xs);

} // namespace qtraj::ergodic
