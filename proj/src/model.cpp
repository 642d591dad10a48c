#include "qtraj/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace qtraj::model {

namespace {

constexpr std::array<double, 3> kSemigroupCpTimes{0.01, 0.1, 1.0};

Check make_check(std::string name, double deviation, double tolerance) {
    return Check{std::move(name), deviation, tolerance, deviation <= tolerance};
}

// Assumes shapes were validated.
Superoperator assemble_generator(const LindbladModel& m) {
    const Complex i_unit(0.0, 1.0);
    Superoperator L = -i_unit * (Superoperator::left(m.hamiltonian) - Superoperator::right(m.hamiltonian));
    for (const auto& v : m.jump_operators) {
        const ComplexMatrix vv = v.adjoint() * v;
        L += Superoperator::conjugation(v);
        L -= Complex(0.5) * (Superoperator::left(vv) + Superoperator::right(vv));
    }
    return L;
}

UnravelingDecomposition natural_decomposition(const LindbladModel& m, const Superoperator& L) {
    UnravelingDecomposition out;
    out.L0 = L;
    for (const auto& v : m.jump_operators) {
        out.jumps.push_back(Superoperator::conjugation(v));
        out.L0 -= out.jumps.back();
    }
    return out;
}

double cp_deviation(const Superoperator& s) {
    const double lo = choi_min_eigenvalue(s);
    return lo >= 0.0 ? 0.0 : -lo;
}

} // namespace

Superoperator UnravelingDecomposition::generator() const {
    Superoperator L = L0;
    for (const auto& j : jumps) L += j;
    return L;
}

bool ValidationReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* ValidationReport::first_failure() const {
    for (const auto& c : checks) {
        if (!c.pass) return &c;
    }
    return nullptr;
}

ValidationReport validate_model(const LindbladModel& m) {
    ValidationReport report;
    const Index d = m.hamiltonian.rows();
    const bool square = d > 0 && m.hamiltonian.cols() == d;
    report.checks.push_back(make_check("hamiltonian is square", square ? 0.0 : 1.0, 0.0));
    report.checks.push_back(
        make_check("at least one jump operator", m.jump_operators.empty() ? 1.0 : 0.0, 0.0));
    bool shapes = square;
    for (const auto& v : m.jump_operators) {
        shapes = shapes && v.rows() == d && v.cols() == d;
    }
    report.checks.push_back(make_check("jump operators are d×d", shapes ? 0.0 : 1.0, 0.0));
    if (!shapes) return report;

    bool finite = m.hamiltonian.allFinite();
    for (const auto& v : m.jump_operators) finite = finite && v.allFinite();
    report.checks.push_back(make_check("entries finite", finite ? 0.0 : 1.0, 0.0));
    if (!finite) return report;

    report.checks.push_back(make_check("hamiltonian Hermitian", hermiticity_defect(m.hamiltonian),
                                       tolerances().hermitian));
    return report;
}

ValidationReport validate(const LindbladModel& m, const DecompositionChoice& choice) {
    ValidationReport report = validate_model(m);
    if (!report.ok()) return report;

    const Tolerances& tol = tolerances();
    const Superoperator L = assemble_generator(m);
    report.checks.push_back(make_check("trace condition tr L(X) = 0", trace_condition_defect(L),
                                       tol.trace_condition));

    UnravelingDecomposition dec;
    if (std::holds_alternative<NaturalChoice>(choice)) {
        dec = natural_decomposition(m, L);
    } else {
        const auto& ex = std::get<ExplicitSuperoperators>(choice);
        bool dims = ex.L0.dim() == m.dim();
        for (const auto& j : ex.jumps) dims = dims && j.dim() == m.dim();
        report.checks.push_back(make_check("decomposition dimensions", dims ? 0.0 : 1.0, 0.0));
        if (!dims) return report;
        dec.L0 = ex.L0;
        dec.jumps = ex.jumps;
    }

    const Superoperator residual = dec.generator() - L;
    report.checks.push_back(make_check("decomposition sum L0 + sum J = L",
                                       residual.matrix().cwiseAbs().maxCoeff(), tol.decomposition_sum));
    for (std::size_t i = 0; i < dec.jumps.size(); ++i) {
        std::ostringstream name;
        name << "J[" << i + 1 << "] completely positive";
        report.checks.push_back(make_check(name.str(), cp_deviation(dec.jumps[i]), tol.cp_jump));
    }
    for (double t : kSemigroupCpTimes) {
        std::ostringstream name;
        name << "exp(" << t << " L0) completely positive";
        double deviation = std::numeric_limits<double>::infinity();
        try {
            deviation = cp_deviation(propagator(dec.L0, t));
        } catch (const OverflowError&) {
        }
        report.checks.push_back(make_check(name.str(), deviation, tol.cp_semigroup));
    }
    return report;
}

Superoperator build_generator(const LindbladModel& m) {
    const ValidationReport report = validate_model(m);
    if (const Check* bad = report.first_failure()) {
        std::ostringstream os;
        os << "deviation " << bad->deviation << " exceeds " << bad->tolerance;
        throw InvariantError(bad->name, os.str());
    }
    return assemble_generator(m);
}

UnravelingDecomposition build_decomposition(const LindbladModel& m, const DecompositionChoice& choice) {
    const ValidationReport report = validate(m, choice);
    if (const Check* bad = report.first_failure()) {
        std::ostringstream os;
        os << "deviation " << bad->deviation << " exceeds " << bad->tolerance;
        throw InvariantError(bad->name, os.str());
    }
    const Superoperator L = assemble_generator(m);
    if (std::holds_alternative<NaturalChoice>(choice)) {
        return natural_decomposition(m, L);
    }
    const auto& ex = std::get<ExplicitSuperoperators>(choice);
    return UnravelingDecomposition{ex.L0, ex.jumps};
}

ComplexMatrix choi_matrix(const Superoperator& s) {
    const Index d = s.dim();
    ComplexMatrix c = ComplexMatrix::Zero(d * d, d * d);
    for (Index j = 0; j < d; ++j) {
        for (Index k = 0; k < d; ++k) {
            // vec(E_jk) is the unit vector at k*d + j; S(E_jk) is that column.
            const ComplexVector col = s.matrix().col(k * d + j);
            c.block(j * d, k * d, d, d) = col.reshaped(d, d);
        }
    }
    return c;
}

double choi_min_eigenvalue(const Superoperator& s) {
    const ComplexMatrix c = choi_matrix(s);
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    if (hermiticity_defect(c) > 1e-9 * scale) {
        return -std::numeric_limits<double>::infinity();
    }
    return min_hermitian_eigenvalue(c);
}

Superoperator propagator(const Superoperator& L, double t) {
    if (!(t >= 0.0)) {
        throw InvariantError("propagator time", "t must be non-negative");
    }
    return Superoperator(L.dim(), matrix_exp(L.matrix(), t));
}

double trace_condition_defect(const Superoperator& L) {
    if (L.dim() == 0) return 0.0;
    return L.trace_row().cwiseAbs().maxCoeff();
}

} // namespace qtraj::model
