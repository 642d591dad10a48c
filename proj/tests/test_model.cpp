#include <gtest/gtest.h>

#include "qtraj/model.hpp"
#include "test_support.hpp"

using namespace qtraj;
using namespace qtraj::testing;

namespace {

const Complex I(0.0, 1.0);

}

TEST(BuildGenerator, AmplitudeDampingOnExcitedState) {
    const Superoperator L = model::build_generator(amplitude_damping());
    const ComplexMatrix out = L(ket_bra(2, 1, 1));
    EXPECT_LT(max_abs(out - (ket_bra(2, 0, 0) - ket_bra(2, 1, 1))), 1e-15);
}

TEST(BuildGenerator, NullModelGivesZeroMap) {
    EXPECT_TRUE(model::build_generator(null_model(3)).matrix().isZero(0.0));
}

TEST(BuildGenerator, PureHamiltonianCommutator) {
    const model::LindbladModel m{mat2(1.0, 0.0, 0.0, -1.0), {ComplexMatrix::Zero(2, 2)}};
    const Superoperator L = model::build_generator(m);
    EXPECT_LT(max_abs(L(ket_bra(2, 0, 0))), 1e-15);
    EXPECT_LT(max_abs(L(ket_bra(2, 0, 1)) - (-2.0 * I) * ket_bra(2, 0, 1)), 1e-15);
}

TEST(BuildGenerator, MatchesTermByTermEvaluation) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const Index d = 2 + trial % 3;
        const auto m = random_model(rng, d, 1 + trial % 3);
        const Superoperator L = model::build_generator(m);
        const ComplexMatrix x = random_complex(rng, d, d);
        EXPECT_LT(max_abs(L(x) - lindblad_brute_force(m, x)), 1e-12) << "trial " << trial;
    }
}

TEST(BuildGenerator, RejectsNonHermitianHamiltonian) {
    model::LindbladModel m = amplitude_damping();
    m.hamiltonian = mat2(0.0, 1.0, 0.0, 0.0);
    try {
        model::build_generator(m);
        FAIL() << "expected InvariantError";
    } catch (const InvariantError& e) {
        EXPECT_NE(e.invariant().find("Hermitian"), std::string::npos);
    }
}

TEST(BuildGenerator, RejectsShapeProblems) {
    model::LindbladModel no_jumps{ComplexMatrix::Zero(2, 2), {}};
    EXPECT_THROW(model::build_generator(no_jumps), InvariantError);
    model::LindbladModel wrong_size{ComplexMatrix::Zero(2, 2), {ComplexMatrix::Zero(3, 3)}};
    EXPECT_THROW(model::build_generator(wrong_size), InvariantError);
}

// 20 random models, 10 random states each: the generator is trace-annihilating.
TEST(BuildGenerator, TraceConditionOnRandomModels) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const Index d = 2 + trial % 3;
        const auto m = random_model(rng, d, 1 + (trial / 3) % 3);
        const Superoperator L = model::build_generator(m);
        for (int s = 0; s < 10; ++s) {
            EXPECT_LE(std::abs(L(random_density(rng, d)).trace()), 1e-12);
        }
    }
}

TEST(BuildDecomposition, AmplitudeDampingNaturalChoice) {
    const auto dec = model::build_decomposition(amplitude_damping());
    ASSERT_EQ(dec.jumps.size(), 1u);
    EXPECT_LT(max_abs(dec.jumps[0](ket_bra(2, 1, 1)) - ket_bra(2, 0, 0)), 1e-15);
    EXPECT_LT(max_abs(dec.L0(ket_bra(2, 1, 1)) + ket_bra(2, 1, 1)), 1e-15);
}

TEST(BuildDecomposition, NullModelHasZeroJumpsAndL0EqualsL) {
    const auto m = null_model();
    const auto dec = model::build_decomposition(m);
    EXPECT_TRUE(dec.jumps[0].matrix().isZero(0.0));
    EXPECT_EQ(dec.L0.matrix(), model::build_generator(m).matrix());
}

TEST(BuildDecomposition, ExplicitZeroJumpsAccepted) {
    const auto m = amplitude_damping();
    const Superoperator L = model::build_generator(m);
    model::ExplicitSuperoperators choice{L, {Superoperator::zero(2)}};
    const auto dec = model::build_decomposition(m, choice);
    EXPECT_EQ(dec.L0.matrix(), L.matrix());
}

TEST(BuildDecomposition, ExplicitNonCpJumpRejectedByName) {
    const auto m = amplitude_damping();
    const Superoperator L = model::build_generator(m);
    const auto transpose = Superoperator::from_map(2, [](const ComplexMatrix& x) -> ComplexMatrix {
        return x.transpose();
    });
    model::ExplicitSuperoperators choice{L - transpose, {transpose}};
    try {
        model::build_decomposition(m, choice);
        FAIL() << "expected InvariantError";
    } catch (const InvariantError& e) {
        EXPECT_NE(e.invariant().find("completely positive"), std::string::npos) << e.invariant();
    }
}

TEST(BuildDecomposition, ExplicitSumMismatchRejectedByName) {
    const auto m = amplitude_damping();
    model::ExplicitSuperoperators choice{Superoperator::zero(2), {Superoperator::zero(2)}};
    try {
        model::build_decomposition(m, choice);
        FAIL() << "expected InvariantError";
    } catch (const InvariantError& e) {
        EXPECT_NE(e.invariant().find("decomposition sum"), std::string::npos) << e.invariant();
    }
}

TEST(BuildDecomposition, NaturalChoiceInvariantsOnRandomModels) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Index d = 2 + trial % 3;
        const auto m = random_model(rng, d, 1 + (trial / 3) % 3);
        const auto dec = model::build_decomposition(m);
        Superoperator sum = dec.L0;
        for (const auto& j : dec.jumps) {
            sum += j;
            EXPECT_GE(model::choi_min_eigenvalue(j), -1e-9);
        }
        EXPECT_LE(max_abs(sum.matrix() - model::build_generator(m).matrix()), 1e-12);
    }
}

TEST(Validate, ReportsEveryCheck) {
    const auto report = model::validate(amplitude_damping());
    EXPECT_TRUE(report.ok());
    EXPECT_EQ(report.first_failure(), nullptr);
    EXPECT_GE(report.checks.size(), 8u);
}

TEST(Choi, IdentityMapIsRankOneTraceTwo) {
    const ComplexMatrix c = model::choi_matrix(Superoperator::identity(2));
    EXPECT_NEAR(c.trace().real(), 2.0, 1e-15);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(c);
    EXPECT_NEAR(es.eigenvalues()(3), 2.0, 1e-14);
    EXPECT_NEAR(es.eigenvalues()(2), 0.0, 1e-14);
    EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-14);
}

TEST(Choi, MatchesBlockDefinition) {
    std::mt19937_64 rng(24);
    const ComplexMatrix v = random_complex(rng, 3, 3);
    const Superoperator s = Superoperator::conjugation(v);
    ComplexMatrix oracle = ComplexMatrix::Zero(9, 9);
    for (Index j = 0; j < 3; ++j) {
        for (Index k = 0; k < 3; ++k) oracle.block(3 * j, 3 * k, 3, 3) = v * ket_bra(3, j, k) * v.adjoint();
    }
    EXPECT_LT(max_abs(model::choi_matrix(s) - oracle), 1e-14);
}

TEST(Choi, AmplitudeDampingJumpIsPositive) {
    const auto dec = model::build_decomposition(amplitude_damping());
    EXPECT_GE(model::choi_min_eigenvalue(dec.jumps[0]), -1e-12);
}

TEST(Choi, TransposeMapHasEigenvalueMinusOne) {
    const auto transpose = Superoperator::from_map(2, [](const ComplexMatrix& x) -> ComplexMatrix {
        return x.transpose();
    });
    EXPECT_NEAR(model::choi_min_eigenvalue(transpose), -1.0, 1e-14);
}

TEST(Propagator, TimeZeroIsIdentity) {
    const Superoperator L = model::build_generator(amplitude_damping());
    EXPECT_LT(max_abs(model::propagator(L, 0.0).matrix() - ComplexMatrix::Identity(4, 4)), 1e-15);
}

TEST(Propagator, AmplitudeDampingExcitedPopulation) {
    const Superoperator L = model::build_generator(amplitude_damping());
    for (double t : {0.1, 1.0, 3.0, 10.0}) {
        const ComplexMatrix rho = model::propagator(L, t)(ket_bra(2, 1, 1));
        EXPECT_NEAR(rho(1, 1).real(), std::exp(-t), 1e-12) << "t=" << t;
        EXPECT_NEAR(rho(0, 0).real(), 1.0 - std::exp(-t), 1e-12);
    }
}

TEST(Propagator, NullGeneratorGivesIdentity) {
    const Superoperator L = model::build_generator(null_model());
    EXPECT_TRUE(model::propagator(L, 42.0).matrix().isIdentity(0.0));
}

TEST(Propagator, RejectsNegativeTime) {
    const Superoperator L = model::build_generator(amplitude_damping());
    EXPECT_THROW(model::propagator(L, -1.0), Error);
}

TEST(Propagator, SemigroupTracePositivityAndDerivative) {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        const Index d = 2 + trial % 3;
        const auto m = random_model(rng, d, 2);
        const Superoperator L = model::build_generator(m);
        const Superoperator a = model::propagator(L, 0.4);
        const Superoperator b = model::propagator(L, 0.9);
        const Superoperator ab = model::propagator(L, 1.3);
        EXPECT_LT(max_abs((a * b).matrix() - ab.matrix()), 1e-9);

        const ComplexMatrix rho = random_density(rng, d);
        const ComplexMatrix out = ab(rho);
        EXPECT_NEAR(out.trace().real(), 1.0, 1e-9);
        EXPECT_GE(min_hermitian_eigenvalue(out), -1e-10);

        // Central finite difference of T_t at 0 recovers L; T_{-h} is the inverse of T_h.
        const double h = 1e-5;
        const ComplexMatrix th = model::propagator(L, h).matrix();
        const ComplexMatrix fd = (th - th.inverse()) / (2.0 * h);
        EXPECT_LT(max_abs(fd - L.matrix()), 1e-6 * (1.0 + max_abs(L.matrix())));
    }
}
