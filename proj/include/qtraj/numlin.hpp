// numlin.hpp - dense complex linear algebra for small open systems
//
// Operators are d×d Eigen matrices; superoperators are d²×d² matrices acting
// on column-stacked operators, so vec(A X B) = (Bᵀ ⊗ A) vec(X). Eigen stores
// dynamic matrices column-major, which makes vectorize a plain reshape.

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "qtraj/error.hpp"

namespace qtraj {

using Complex = std::complex<double>;
using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using ComplexMatrix = Matrix<Complex>;
using ComplexVector = Vector<Complex>;
using RealMatrix = Matrix<double>;
using RealVector = Vector<double>;

// Numerical thresholds used across modules. Defaults are the documented
// values; the CLI can override them from QTRAJ_TOL_* environment variables
// before any work starts.
struct Tolerances {
    double density = 1e-10;            // Hermiticity, trace, eigenvalue floor of states
    double hermitian = 1e-10;          // Hamiltonian Hermiticity
    double trace_condition = 1e-10;    // |tr L(X)| on basis operators
    double decomposition_sum = 1e-10;  // L0 + Σ Ji = L entrywise
    double cp_jump = 1e-9;             // Choi(Ji) eigenvalue floor (negated)
    double cp_semigroup = 1e-8;        // Choi(e^{tL0}) eigenvalue floor (negated)
    double kraus = 1e-10;              // Σ Vi* Vi = I
    double zero_eigenvalue = 1e-9;     // relative clustering of the eigenvalue 0 (or 1)
    double near_defective = 1e12;      // eigenvector condition number limit
    double cached_propagation = 1e6;   // condition limit for spectral propagation caches
    double min_trace = 1e-12;          // degenerate-state floor in project_density
    double min_rate = 1e-14;           // total jump rate below which a state is dark
};

const Tolerances& tolerances();
void set_tolerances(const Tolerances& tol);
// Reads QTRAJ_TOL_<FIELD> (upper-case field name) for every field of `base`.
Tolerances tolerances_from_env(Tolerances base = {});

// --------------------------- vectorization -----------------------------------

template <typename Derived>
Vector<typename Derived::Scalar> vectorize(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("vectorize: matrix must be square");
    }
    Matrix<typename Derived::Scalar> tmp = m;
    return tmp.reshaped();
}

template <typename Derived>
Matrix<typename Derived::Scalar> devectorize(const Eigen::MatrixBase<Derived>& v) {
    static_assert(Derived::ColsAtCompileTime == 1 || Derived::ColsAtCompileTime == Eigen::Dynamic);
    if (v.cols() != 1) {
        throw DimensionError("devectorize: expected a column vector");
    }
    const auto d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (d * d != v.size()) {
        throw DimensionError("devectorize: length is not a perfect square");
    }
    Vector<typename Derived::Scalar> tmp = v;
    return tmp.reshaped(d, d);
}

template <typename Derived>
Matrix<typename Derived::Scalar> hermitian_part(const Eigen::MatrixBase<Derived>& m) {
    return (m + m.adjoint()) / 2.0;
}

template <typename Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

// Kronecker product A ⊗ B.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// --------------------------- states ------------------------------------------

// Returns a description of the first violated state invariant, if any.
std::optional<std::string> density_violation(const ComplexMatrix& m, double tol);

class DensityMatrix {
public:
    // Validates Hermiticity, positivity and unit trace; throws InvariantError.
    explicit DensityMatrix(ComplexMatrix m);

    // For internal hot paths whose output is a density matrix by construction.
    static DensityMatrix unchecked(ComplexMatrix m) { return DensityMatrix(std::move(m), Trusted{}); }

    static DensityMatrix pure(Index d, Index n);
    static DensityMatrix pure(const ComplexVector& psi);
    static DensityMatrix maximally_mixed(Index d);

    Index dim() const noexcept { return m_.rows(); }
    const ComplexMatrix& matrix() const noexcept { return m_; }

private:
    struct Trusted {};
    DensityMatrix(ComplexMatrix m, Trusted) : m_(std::move(m)) {}
    ComplexMatrix m_;
};

// --------------------------- superoperators ----------------------------------

class Superoperator {
public:
    Superoperator() = default;
    Superoperator(Index d, ComplexMatrix m);

    static Superoperator identity(Index d);
    static Superoperator zero(Index d);
    // X ↦ A X
    static Superoperator left(const ComplexMatrix& a);
    // X ↦ X B
    static Superoperator right(const ComplexMatrix& b);
    // X ↦ V X V*
    static Superoperator conjugation(const ComplexMatrix& v);

    // Builds the matrix column by column from an arbitrary linear map.
    template <typename F>
    static Superoperator from_map(Index d, F&& f) {
        ComplexMatrix m(d * d, d * d);
        for (Index c = 0; c < d; ++c) {
            for (Index r = 0; r < d; ++r) {
                ComplexMatrix e = ComplexMatrix::Zero(d, d);
                e(r, c) = 1.0;
                const ComplexMatrix image = f(e);
                m.col(c * d + r) = image.reshaped();
            }
        }
        return Superoperator(d, std::move(m));
    }

    Index dim() const noexcept { return d_; }
    const ComplexMatrix& matrix() const noexcept { return m_; }

    ComplexMatrix operator()(const ComplexMatrix& x) const;
    ComplexMatrix operator()(const DensityMatrix& rho) const { return (*this)(rho.matrix()); }

    // Row r with tr S(X) = r · vec(X) (no conjugation).
    ComplexVector trace_row() const;

    Superoperator& operator+=(const Superoperator& other);
    Superoperator& operator-=(const Superoperator& other);
    friend Superoperator operator+(Superoperator a, const Superoperator& b) { return a += b; }
    friend Superoperator operator-(Superoperator a, const Superoperator& b) { return a -= b; }
    // Composition: (a * b)(X) = a(b(X)).
    friend Superoperator operator*(const Superoperator& a, const Superoperator& b);
    friend Superoperator operator*(Complex s, const Superoperator& a);

private:
    Index d_ = 0;
    ComplexMatrix m_;
};

// --------------------------- dense kernels -----------------------------------

// e^{tA} by scaling and squaring with Padé approximants; throws OverflowError
// when the result is not finite.
ComplexMatrix matrix_exp(const ComplexMatrix& a, double t);

struct EigenDecomposition {
    ComplexVector values;
    ComplexMatrix vectors;   // S, unit-norm columns
    ComplexMatrix inverse;   // S⁻¹
    double condition = 0.0;  // ‖S‖₁‖S⁻¹‖₁
};

// A = S Λ S⁻¹ without conditioning checks.
EigenDecomposition eigendecompose(const ComplexMatrix& a);
// As above, but throws NearDefectiveError above tolerances().near_defective.
EigenDecomposition eig(const ComplexMatrix& a);

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

// Hermitize, clip negative eigenvalues, renormalize.
DensityMatrix project_density(const ComplexMatrix& m);

// Smallest eigenvalue of the Hermitian part of m.
double min_hermitian_eigenvalue(const ComplexMatrix& m);

// Largest singular value.
double operator_norm(const ComplexMatrix& m);

// Induced 1-norm (max column absolute sum).
double one_norm(const ComplexMatrix& m);

// Repeated evaluation of x ↦ e^{tA}x. Uses a cached eigendecomposition when the
// eigenvector matrix is well-conditioned and falls back to matrix_exp per call.
class ExpEvaluator {
public:
    ExpEvaluator() = default;
    explicit ExpEvaluator(const ComplexMatrix& generator);

    ComplexVector apply(double t, const ComplexVector& x) const;
    // Coefficients (a, λ) with r·e^{tA}x = Σ a_j e^{λ_j t}; only valid when spectral().
    std::pair<ComplexVector, ComplexVector> scalar_modes(const ComplexVector& row,
                                                         const ComplexVector& x) const;

    bool spectral() const noexcept { return spectral_; }
    const ComplexMatrix& generator() const noexcept { return a_; }

private:
    ComplexMatrix a_;
    bool spectral_ = false;
    EigenDecomposition eig_;
};

} // namespace qtraj
