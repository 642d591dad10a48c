#include <gtest/gtest.h>

#include "qtraj/diffusive.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/random.hpp"
#include "test_support.hpp"

using namespace qtraj;
using namespace qtraj::testing;

namespace {

diffusive::DiffusiveStepConfig cfg(double horizon, double dt = 1e-3) {
    diffusive::DiffusiveStepConfig c;
    c.horizon = horizon;
    c.dt = dt;
    return c;
}

} // namespace

TEST(DiffusionCoefficient, GroundStateIsFixed) {
    EXPECT_TRUE(diffusive::diffusion_coefficient(DensityMatrix::pure(2, 0), ket_bra(2, 0, 1)).isZero(0.0));
}

TEST(DiffusionCoefficient, IdentityOperatorGivesZero) {
    std::mt19937_64 rng(41);
    const ComplexMatrix rho = random_density(rng, 3);
    EXPECT_LT(max_abs(diffusive::diffusion_coefficient(rho, ComplexMatrix::Identity(3, 3))), 1e-15);
}

TEST(DiffusionCoefficient, MaximallyMixedWithPauliX) {
    const ComplexMatrix sx = mat2(0.0, 1.0, 1.0, 0.0);
    EXPECT_LT(max_abs(diffusive::diffusion_coefficient(DensityMatrix::maximally_mixed(2), sx) - sx), 1e-15);
}

TEST(DiffusionCoefficient, TracelessAndHermitian) {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 50; ++i) {
        const Index d = 2 + i % 3;
        const ComplexMatrix rho = random_density(rng, d);
        const ComplexMatrix x = diffusive::diffusion_coefficient(rho, random_complex(rng, d, d));
        EXPECT_LE(std::abs(x.trace()), 1e-12);
        EXPECT_LE(hermiticity_defect(x), 1e-14);
    }
}

TEST(EmStep, GroundStateFixedUnderAmplitudeDamping) {
    const auto m = amplitude_damping();
    const Superoperator L = model::build_generator(m);
    const std::vector<double> g{2.7};
    const ComplexMatrix next = diffusive::em_step(ket_bra(2, 0, 0), L, m.jump_operators, 1e-2, g);
    EXPECT_LT(max_abs(next - ket_bra(2, 0, 0)), 1e-16);
}

TEST(EmStep, ZeroNoiseIsEulerStep) {
    std::mt19937_64 rng(43);
    const auto m = random_model(rng, 3, 2);
    const Superoperator L = model::build_generator(m);
    const ComplexMatrix rho = random_density(rng, 3);
    const std::vector<double> g{0.0, 0.0};
    const ComplexMatrix next = diffusive::em_step(rho, L, m.jump_operators, 1e-3, g);
    EXPECT_LT(max_abs(next - (rho + 1e-3 * lindblad_brute_force(m, rho))), 1e-14);
}

TEST(EmStep, NullModelLeavesStateUnchanged) {
    const auto m = null_model();
    const Superoperator L = model::build_generator(m);
    const std::vector<double> g{1.3};
    EXPECT_LT(max_abs(diffusive::em_step(plus_state(), L, m.jump_operators, 1e-2, g) - plus_state()), 1e-16);
}

TEST(EmStep, MatchesExplicitFormulaAndPreservesTrace) {
    std::mt19937_64 rng(44);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 50; ++i) {
        const Index d = 2 + i % 3;
        const auto m = random_model(rng, d, 1 + i % 3);
        const Superoperator L = model::build_generator(m);
        const ComplexMatrix rho = random_density(rng, d);
        std::vector<double> g;
        for (std::size_t k = 0; k < m.jump_operators.size(); ++k) g.push_back(normal(rng));
        const double dt = 1e-3;
        ComplexMatrix expected = rho + dt * lindblad_brute_force(m, rho);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const ComplexMatrix& v = m.jump_operators[k];
            const ComplexMatrix s = rho * v.adjoint() + v * rho;
            expected += (s - s.trace() * rho) * (std::sqrt(dt) * g[k]);
        }
        const ComplexMatrix next = diffusive::em_step(rho, L, m.jump_operators, dt, g);
        EXPECT_LT(max_abs(next - expected), 1e-13);
        EXPECT_NEAR(next.trace().real(), 1.0, 1e-12);
        EXPECT_LE(std::abs(next.trace().imag()), 1e-12);
    }
}

TEST(DiffusiveConfig, RejectsBadSteps) {
    auto c = cfg(1.0, 0.2);
    EXPECT_THROW(c.validate(), Error);
    c.dt = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c.dt = 1e-3;
    c.repair_every = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(DiffusiveSimulate, GroundStateIsConstantPath) {
    const SampledPath p = diffusive::simulate(amplitude_damping(), DensityMatrix::pure(2, 0), cfg(2.0), 1);
    for (const auto& s : p.states) EXPECT_LT(max_abs(s.matrix() - ket_bra(2, 0, 0)), 1e-15);
}

TEST(DiffusiveSimulate, NullModelIsConstantPath) {
    const DensityMatrix plus(plus_state());
    const SampledPath p = diffusive::simulate(null_model(), plus, cfg(1.0), 1);
    for (const auto& s : p.states) EXPECT_LT(max_abs(s.matrix() - plus.matrix()), 1e-15);
}

TEST(DiffusiveSimulate, GridAndDeterminism) {
    std::mt19937_64 rng(45);
    auto m = random_model(rng, 3, 2);
    for (auto& v : m.jump_operators) v *= 0.3;  // weak measurement keeps the state mixed
    const DensityMatrix rho = DensityMatrix::maximally_mixed(3);
    auto c = cfg(1.0, 1e-3);
    c.grid_step = 0.1;
    const SampledPath a = diffusive::simulate(m, rho, c, 8);
    const SampledPath b = diffusive::simulate(m, rho, c, 8);
    ASSERT_EQ(a.size(), 11u);
    EXPECT_NEAR(a.times.back(), 1.0, 1e-12);
    for (std::size_t n = 0; n < a.size(); ++n) {
        EXPECT_EQ(a.states[n].matrix(), b.states[n].matrix());
        EXPECT_FALSE(density_violation(a.states[n].matrix(), 1e-10).has_value());
    }
}

TEST(DiffusiveSimulate, GuardAbortReportsStep) {
    auto c = cfg(1.0, 1e-2);
    c.min_eig_guard = 0.0;
    try {
        diffusive::simulate(amplitude_damping(), DensityMatrix::pure(2, 1), c, 3);
        FAIL() << "expected GuardAbort";
    } catch (const GuardAbort& e) {
        EXPECT_GE(e.step(), 1);
        EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
    }
}

TEST(DiffusiveSimulate, ZeroNoiseConvergesLinearlyToPropagator) {
    const auto m = amplitude_damping();
    const ComplexMatrix exact = model::propagator(model::build_generator(m), 1.0)(ket_bra(2, 1, 1));
    auto error_at = [&](double dt) {
        auto c = cfg(1.0, dt);
        c.noiseless = true;
        c.grid_step = 1.0;
        const SampledPath p = diffusive::simulate(m, DensityMatrix::pure(2, 1), c, 0);
        return max_abs(p.states.back().matrix() - exact);
    };
    const double coarse = error_at(1e-2);
    const double fine = error_at(1e-3);
    EXPECT_LE(fine, 5e-3);
    EXPECT_GT(coarse / fine, 7.0);
    EXPECT_LT(coarse / fine, 13.0);
}

TEST(DiffusiveSimulate, EnsembleMeanReproducesPropagator) {
    // Starting from the maximally mixed state keeps the scheme clear of the guard.
    const auto m = amplitude_damping();
    const DensityMatrix rho = DensityMatrix::maximally_mixed(2);
    const std::size_t n = 1500;
    auto c = cfg(1.0, 1e-3);
    c.grid_step = 1.0;
    const auto finals = run_ensemble(n, 1, [&](std::size_t i) {
        return diffusive::simulate(m, rho, c, stream_seed(5, i)).states.back().matrix();
    });
    ComplexMatrix mean = ComplexMatrix::Zero(2, 2);
    for (const auto& f : finals) mean += f;
    mean /= static_cast<double>(n);
    const ComplexMatrix exact = model::propagator(model::build_generator(m), 1.0)(rho);
    EXPECT_LT(trace_distance(mean, exact), 0.03);
}
