#include "qtraj/numlin.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qtraj {

namespace {

Tolerances& mutable_tolerances() {
    static Tolerances tol;
    return tol;
}

void read_env(const char* name, double& field) {
    if (const char* raw = std::getenv(name)) {
        char* end = nullptr;
        const double value = std::strtod(raw, &end);
        if (end == raw || *end != '\0') {
            throw ParseError(std::string("environment variable ") + name + " is not a number: " + raw);
        }
        field = value;
    }
}

void require_square(const ComplexMatrix& m, const char* where) {
    if (m.rows() != m.cols()) {
        throw DimensionError(std::string(where) + ": matrix must be square");
    }
}

} // namespace

const Tolerances& tolerances() { return mutable_tolerances(); }

void set_tolerances(const Tolerances& tol) { mutable_tolerances() = tol; }

Tolerances tolerances_from_env(Tolerances base) {
    read_env("QTRAJ_TOL_DENSITY", base.density);
    read_env("QTRAJ_TOL_HERMITIAN", base.hermitian);
    read_env("QTRAJ_TOL_TRACE_CONDITION", base.trace_condition);
    read_env("QTRAJ_TOL_DECOMPOSITION_SUM", base.decomposition_sum);
    read_env("QTRAJ_TOL_CP_JUMP", base.cp_jump);
    read_env("QTRAJ_TOL_CP_SEMIGROUP", base.cp_semigroup);
    read_env("QTRAJ_TOL_KRAUS", base.kraus);
    read_env("QTRAJ_TOL_ZERO_EIGENVALUE", base.zero_eigenvalue);
    read_env("QTRAJ_TOL_NEAR_DEFECTIVE", base.near_defective);
    read_env("QTRAJ_TOL_CACHED_PROPAGATION", base.cached_propagation);
    read_env("QTRAJ_TOL_MIN_TRACE", base.min_trace);
    read_env("QTRAJ_TOL_MIN_RATE", base.min_rate);
    return base;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix k = Eigen::kroneckerProduct(a, b);
    return k;
}

// --------------------------- DensityMatrix -----------------------------------

std::optional<std::string> density_violation(const ComplexMatrix& m, double tol) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        return "not a non-empty square matrix";
    }
    if (!m.allFinite()) {
        return "non-finite entries";
    }
    const double herm = hermiticity_defect(m);
    if (herm > tol) {
        std::ostringstream os;
        os << "not Hermitian (max |M - M*| = " << herm << ")";
        return os.str();
    }
    const Complex tr = m.trace();
    if (std::abs(tr - 1.0) > tol) {
        std::ostringstream os;
        os << "trace " << tr.real() << "+" << tr.imag() << "i differs from 1";
        return os.str();
    }
    const double lo = min_hermitian_eigenvalue(m);
    if (lo < -tol) {
        std::ostringstream os;
        os << "negative eigenvalue " << lo;
        return os.str();
    }
    return std::nullopt;
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
    if (auto why = density_violation(m_, tolerances().density)) {
        throw InvariantError("density matrix", *why);
    }
}

DensityMatrix DensityMatrix::pure(Index d, Index n) {
    if (d <= 0 || n < 0 || n >= d) {
        throw DimensionError("DensityMatrix::pure: basis index out of range");
    }
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    m(n, n) = 1.0;
    return unchecked(std::move(m));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
    const double norm = psi.norm();
    if (psi.size() == 0 || norm == 0.0) {
        throw DegenerateStateError("DensityMatrix::pure: zero vector");
    }
    const ComplexVector u = psi / norm;
    return unchecked(u * u.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Index d) {
    if (d <= 0) throw DimensionError("DensityMatrix::maximally_mixed: d must be positive");
    return unchecked(ComplexMatrix::Identity(d, d) / static_cast<double>(d));
}

// --------------------------- Superoperator -----------------------------------

Superoperator::Superoperator(Index d, ComplexMatrix m) : d_(d), m_(std::move(m)) {
    if (d <= 0 || m_.rows() != d * d || m_.cols() != d * d) {
        throw DimensionError("Superoperator: matrix must be d²×d²");
    }
}

Superoperator Superoperator::identity(Index d) {
    return Superoperator(d, ComplexMatrix::Identity(d * d, d * d));
}

Superoperator Superoperator::zero(Index d) {
    return Superoperator(d, ComplexMatrix::Zero(d * d, d * d));
}

Superoperator Superoperator::left(const ComplexMatrix& a) {
    require_square(a, "Superoperator::left");
    const Index d = a.rows();
    return Superoperator(d, kron(ComplexMatrix::Identity(d, d), a));
}

Superoperator Superoperator::right(const ComplexMatrix& b) {
    require_square(b, "Superoperator::right");
    const Index d = b.rows();
    return Superoperator(d, kron(b.transpose(), ComplexMatrix::Identity(d, d)));
}

Superoperator Superoperator::conjugation(const ComplexMatrix& v) {
    require_square(v, "Superoperator::conjugation");
    return Superoperator(v.rows(), kron(v.conjugate(), v));
}

ComplexMatrix Superoperator::operator()(const ComplexMatrix& x) const {
    if (x.rows() != d_ || x.cols() != d_) {
        throw DimensionError("Superoperator: operand dimension mismatch");
    }
    ComplexVector y = m_ * x.reshaped();
    return y.reshaped(d_, d_);
}

ComplexVector Superoperator::trace_row() const {
    ComplexVector row = ComplexVector::Zero(d_ * d_);
    for (Index j = 0; j < d_; ++j) {
        row += m_.row(j * d_ + j).transpose();
    }
    return row;
}

Superoperator& Superoperator::operator+=(const Superoperator& other) {
    if (other.d_ != d_) throw DimensionError("Superoperator: dimension mismatch in sum");
    m_ += other.m_;
    return *this;
}

Superoperator& Superoperator::operator-=(const Superoperator& other) {
    if (other.d_ != d_) throw DimensionError("Superoperator: dimension mismatch in difference");
    m_ -= other.m_;
    return *this;
}

Superoperator operator*(const Superoperator& a, const Superoperator& b) {
    if (a.d_ != b.d_) throw DimensionError("Superoperator: dimension mismatch in composition");
    return Superoperator(a.d_, a.m_ * b.m_);
}

Superoperator operator*(Complex s, const Superoperator& a) {
    return Superoperator(a.d_, s * a.m_);
}

// --------------------------- kernels -----------------------------------------

ComplexMatrix matrix_exp(const ComplexMatrix& a, double t) {
    require_square(a, "matrix_exp");
    if (!a.allFinite() || !std::isfinite(t)) {
        throw OverflowError("matrix_exp: non-finite input");
    }
    if (a.size() == 0) return a;
    const ComplexMatrix scaled = t * a;
    ComplexMatrix result = scaled.exp();
    if (!result.allFinite()) {
        std::ostringstream os;
        os << "matrix_exp: overflow (|tA|_1 = " << one_norm(scaled) << ")";
        throw OverflowError(os.str());
    }
    return result;
}

EigenDecomposition eigendecompose(const ComplexMatrix& a) {
    require_square(a, "eig");
    Eigen::ComplexEigenSolver<ComplexMatrix> solver(a, true);
    if (solver.info() != Eigen::Success) {
        throw NearDefectiveError("eig: eigensolver did not converge",
                                 std::numeric_limits<double>::infinity());
    }
    EigenDecomposition out;
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();
    for (Index c = 0; c < out.vectors.cols(); ++c) {
        const double n = out.vectors.col(c).norm();
        if (n > 0.0) out.vectors.col(c) /= n;
    }
    Eigen::PartialPivLU<ComplexMatrix> lu(out.vectors);
    out.inverse = lu.inverse();
    out.condition = one_norm(out.vectors) * one_norm(out.inverse);
    if (!std::isfinite(out.condition)) {
        out.condition = std::numeric_limits<double>::infinity();
    }
    return out;
}

EigenDecomposition eig(const ComplexMatrix& a) {
    EigenDecomposition out = eigendecompose(a);
    if (!(out.condition <= tolerances().near_defective)) {
        std::ostringstream os;
        os << "eig: near-defective matrix (eigenvector condition " << out.condition << ")";
        throw NearDefectiveError(os.str(), out.condition);
    }
    return out;
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
        throw DimensionError("trace_distance: dimension mismatch");
    }
    const ComplexMatrix diff = hermitian_part(a - b);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(diff, Eigen::EigenvaluesOnly);
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    return trace_distance(rho.matrix(), sigma.matrix());
}

DensityMatrix project_density(const ComplexMatrix& m) {
    require_square(m, "project_density");
    if (!m.allFinite()) {
        throw DegenerateStateError("project_density: non-finite input");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m));
    RealVector w = solver.eigenvalues().cwiseMax(0.0);
    const double total = w.sum();
    if (total <= tolerances().min_trace) {
        throw DegenerateStateError("project_density: clipped trace vanishes");
    }
    w /= total;
    const ComplexMatrix& u = solver.eigenvectors();
    ComplexMatrix out = u * w.cast<Complex>().asDiagonal() * u.adjoint();
    return DensityMatrix::unchecked(hermitian_part(out));
}

double min_hermitian_eigenvalue(const ComplexMatrix& m) {
    require_square(m, "min_hermitian_eigenvalue");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double operator_norm(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    return svd.singularValues()(0);
}

double one_norm(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

// --------------------------- ExpEvaluator ------------------------------------

ExpEvaluator::ExpEvaluator(const ComplexMatrix& generator) : a_(generator) {
    require_square(a_, "ExpEvaluator");
    try {
        eig_ = eigendecompose(a_);
        spectral_ = eig_.condition <= tolerances().cached_propagation &&
                    eig_.values.allFinite();
    } catch (const NearDefectiveError&) {
        spectral_ = false;
    }
}

ComplexVector ExpEvaluator::apply(double t, const ComplexVector& x) const {
    if (!spectral_) {
        return matrix_exp(a_, t) * x;
    }
    ComplexVector c = eig_.inverse * x;
    for (Index j = 0; j < c.size(); ++j) {
        c(j) *= std::exp(eig_.values(j) * t);
    }
    return eig_.vectors * c;
}

std::pair<ComplexVector, ComplexVector> ExpEvaluator::scalar_modes(const ComplexVector& row,
                                                                   const ComplexVector& x) const {
    if (!spectral_) {
        throw NearDefectiveError("ExpEvaluator: no spectral cache", eig_.condition);
    }
    const ComplexVector left = (row.transpose() * eig_.vectors).transpose();
    const ComplexVector right = eig_.inverse * x;
    return {left.cwiseProduct(right), eig_.values};
}

} // namespace qtraj
