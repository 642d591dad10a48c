// Shared fixtures for the unit and acceptance tests: reference models,
// seeded random states and models, and brute-force oracles that do not go
// through the library's superoperator machinery.

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "qtraj/discrete.hpp"
#include "qtraj/model.hpp"

namespace qtraj::testing {

inline ComplexMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
    ComplexMatrix m(2, 2);
    m << a, b, c, d;
    return m;
}

inline ComplexMatrix ket_bra(Index d, Index r, Index c) {
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    m(r, c) = 1.0;
    return m;
}

inline ComplexMatrix plus_state() { return ComplexMatrix::Constant(2, 2, 0.5); }

inline model::LindbladModel amplitude_damping(double rate = 1.0) {
    return {ComplexMatrix::Zero(2, 2), {std::sqrt(rate) * ket_bra(2, 0, 1)}};
}

inline model::LindbladModel dephasing() {
    return {ComplexMatrix::Zero(2, 2), {ket_bra(2, 0, 0), ket_bra(2, 1, 1)}};
}

inline model::LindbladModel null_model(Index d = 2) {
    return {ComplexMatrix::Zero(d, d), {ComplexMatrix::Zero(d, d)}};
}

inline discrete::KrausModel projective_pair() { return {{ket_bra(2, 0, 0), ket_bra(2, 1, 1)}}; }

inline ComplexMatrix random_complex(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    ComplexMatrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) m(r, c) = Complex(n(rng), n(rng));
    }
    return m;
}

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, Index d, double scale = 1.0) {
    const ComplexMatrix g = random_complex(rng, d, d, scale);
    return (g + g.adjoint()) / 2.0;
}

// Ginibre construction: G G* / tr, full rank with probability one.
inline ComplexMatrix random_density(std::mt19937_64& rng, Index d) {
    const ComplexMatrix g = random_complex(rng, d, d);
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return (rho + rho.adjoint()) / 2.0;
}

inline model::LindbladModel random_model(std::mt19937_64& rng, Index d, std::size_t k) {
    model::LindbladModel m;
    m.hamiltonian = random_hermitian(rng, d);
    for (std::size_t i = 0; i < k; ++i) m.jump_operators.push_back(random_complex(rng, d, d, 0.7));
    return m;
}

// L(ρ) evaluated term by term from H and the V's.
inline ComplexMatrix lindblad_brute_force(const model::LindbladModel& m, const ComplexMatrix& rho) {
    const Complex i(0.0, 1.0);
    ComplexMatrix out = -i * (m.hamiltonian * rho - rho * m.hamiltonian);
    for (const auto& v : m.jump_operators) {
        const ComplexMatrix vv = v.adjoint() * v;
        out += v * rho * v.adjoint() - 0.5 * (vv * rho + rho * vv);
    }
    return out;
}

// e^{A} by scaling, a 30-term Taylor series, and squaring. Independent of the
// library's Padé route; adequate for the moderate norms used in tests.
inline ComplexMatrix taylor_exp(const ComplexMatrix& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    while (norm / std::ldexp(1.0, squarings) > 0.25) ++squarings;
    const ComplexMatrix x = a / std::ldexp(1.0, squarings);
    ComplexMatrix term = ComplexMatrix::Identity(a.rows(), a.cols());
    ComplexMatrix sum = term;
    for (int n = 1; n <= 30; ++n) {
        term = term * x / static_cast<double>(n);
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

inline double max_abs(const ComplexMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

} // namespace qtraj::testing
