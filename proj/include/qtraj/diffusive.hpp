// diffusive.hpp - diffusive unraveling integrated by Euler-Maruyama
//
//   dΘ = L(Θ) dt + Σ_i X_i(Θ) dW̃_i,   X_i = ΘV_i* + V_iΘ - tr(ΘV_i* + V_iΘ) Θ
//
// The innovations W̃_i are simulated directly as independent real Brownian
// motions (one per jump operator).

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qtraj/model.hpp"
#include "qtraj/path.hpp"

namespace qtraj::diffusive {

struct DiffusiveStepConfig {
    double dt = 1e-3;
    std::int64_t repair_every = 10;   // project_density cadence, in steps
    double min_eig_guard = -1e-3;     // abort threshold, checked after every step
    double horizon = 1.0;
    double grid_step = 0.05;          // output grid; rounded to a whole number of steps
    bool noiseless = false;           // force all Gaussian increments to zero

    void validate() const;
};

ComplexMatrix diffusion_coefficient(const ComplexMatrix& theta, const ComplexMatrix& v);
inline ComplexMatrix diffusion_coefficient(const DensityMatrix& theta, const ComplexMatrix& v) {
    return diffusion_coefficient(theta.matrix(), v);
}

// Θ + L(Θ)dt + Σ_i X_i √dt g_i. No repair is applied.
ComplexMatrix em_step(const ComplexMatrix& theta, const Superoperator& L, std::span<const ComplexMatrix> vs,
                      double dt, std::span<const double> gaussians);

SampledPath simulate(const model::LindbladModel& m, const DensityMatrix& theta0,
                     const DiffusiveStepConfig& config, std::uint64_t seed);

} // namespace qtraj::diffusive
