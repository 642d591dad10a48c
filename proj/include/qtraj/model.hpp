// model.hpp - Lindblad generators and their unraveling decompositions
//
// Convention: L(ρ) = -i[H,ρ] + Σ_i (V_i ρ V_i* - ½(V_i*V_i ρ + ρ V_i*V_i)).
// The anticommutator form is the one that satisfies tr L(ρ) = 0.

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "qtraj/numlin.hpp"

namespace qtraj::model {

struct LindbladModel {
    ComplexMatrix hamiltonian;
    std::vector<ComplexMatrix> jump_operators;

    Index dim() const noexcept { return hamiltonian.rows(); }
};

struct UnravelingDecomposition {
    Superoperator L0;
    std::vector<Superoperator> jumps;

    Index dim() const noexcept { return L0.dim(); }
    Superoperator generator() const;
};

// J_i(ρ) = V_i ρ V_i*, L0 = L - Σ J_i.
struct NaturalChoice {};

struct ExplicitSuperoperators {
    Superoperator L0;
    std::vector<Superoperator> jumps;
};

using DecompositionChoice = std::variant<NaturalChoice, ExplicitSuperoperators>;

// One line of a structural check: what was measured and whether it is in tolerance.
struct Check {
    std::string name;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<Check> checks;

    bool ok() const;
    const Check* first_failure() const;
};

// Structural checks on the model alone (shapes, Hermiticity of H, k ≥ 1).
ValidationReport validate_model(const LindbladModel& m);
// Full checks: model, trace condition on L, decomposition sum, CP of each J_i
// and of e^{tL0} at t ∈ {0.01, 0.1, 1}. Never throws on invariant failure.
ValidationReport validate(const LindbladModel& m, const DecompositionChoice& choice = NaturalChoice{});

// Throws InvariantError when H is not Hermitian or shapes are inconsistent.
Superoperator build_generator(const LindbladModel& m);

// Throws InvariantError naming the first failing decomposition invariant.
UnravelingDecomposition build_decomposition(const LindbladModel& m,
                                            const DecompositionChoice& choice = NaturalChoice{});

// C = Σ_{jk} E_jk ⊗ S(E_jk); S is completely positive iff C ⪰ 0.
ComplexMatrix choi_matrix(const Superoperator& s);

// Smallest eigenvalue of the Hermitian part of the Choi matrix, or -inf if
// the Choi matrix is not Hermitian (then S is not even Hermiticity-preserving).
double choi_min_eigenvalue(const Superoperator& s);

// T_t = e^{tL}; t must be non-negative.
Superoperator propagator(const Superoperator& L, double t);

// max_X |tr L(X)| over the matrix units; zero iff tr ∘ L = 0.
double trace_condition_defect(const Superoperator& L);

} // namespace qtraj::model
