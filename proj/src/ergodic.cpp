#include "qtraj/ergodic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qtraj/model.hpp"

namespace qtraj::ergodic {

namespace {

constexpr std::array<double, 3> kInvarianceTimes{0.5, 1.0, 5.0};
constexpr double kBasisIndependence = 1e-7;

double max_entry(const ComplexMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Superoperator spectral_projector(const EigenDecomposition& e, const std::vector<Index>& cluster, Index d) {
    const Index n = e.values.size();
    ComplexMatrix p = ComplexMatrix::Zero(n, n);
    for (Index j : cluster) {
        p += e.vectors.col(j) * e.inverse.row(j);
    }
    return Superoperator(d, std::move(p));
}

void continuous_residuals(MeanProjector& out, const Superoperator& L) {
    const ComplexMatrix& p = out.P.matrix();
    out.idempotence_residual = max_entry(p * p - p);
    double inv = 0.0;
    for (double s : kInvarianceTimes) {
        const ComplexMatrix t = matrix_exp(L.matrix(), s);
        inv = std::max({inv, max_entry(p * t - p), max_entry(t * p - p)});
    }
    out.invariance_residual = inv;
}

void discrete_residuals(MeanProjector& out, const Superoperator& T) {
    const ComplexMatrix& p = out.P.matrix();
    out.idempotence_residual = max_entry(p * p - p);
    out.invariance_residual = std::max(max_entry(p * T.matrix() - p), max_entry(T.matrix() * p - p));
}

Superoperator quadrature_projector(const Superoperator& L, double horizon) {
    const Index n = L.matrix().rows();
    ComplexMatrix block = ComplexMatrix::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = L.matrix();
    block.topRightCorner(n, n).setIdentity();
    const ComplexMatrix e = matrix_exp(block, horizon);
    return Superoperator(L.dim(), e.topRightCorner(n, n) / horizon);
}

Superoperator power_average(const Superoperator& T, std::size_t terms) {
    // (S_m, T^m) with S_m = Σ_{n<m} Tⁿ, built along the binary digits of `terms`.
    const Index n = T.matrix().rows();
    ComplexMatrix sum = ComplexMatrix::Zero(n, n);
    ComplexMatrix power = ComplexMatrix::Identity(n, n);
    int top = 0;
    while ((std::size_t{1} << (top + 1)) <= terms) ++top;
    for (int bit = top; bit >= 0; --bit) {
        sum = sum + power * sum;
        power = power * power;
        if (terms & (std::size_t{1} << bit)) {
            sum += power;
            power = power * T.matrix();
        }
    }
    return Superoperator(T.dim(), sum / static_cast<double>(terms));
}

// Real coordinates of a Hermitian matrix, used for rank decisions.
RealVector hermitian_coordinates(const ComplexMatrix& m) {
    const Index n = m.size();
    RealVector v(2 * n);
    v.head(n) = m.reshaped().real();
    v.tail(n) = m.reshaped().imag();
    return v;
}

double median(std::vector<double> xs) {
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    double m = xs[mid];
    if (xs.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

std::string entry_name(const std::string& base, Index r, Index c, const char* part) {
    std::ostringstream os;
    os << base << "[" << r << "][" << c << "]." << part;
    return os.str();
}

std::string at_time(const std::string& base, double t) {
    std::ostringstream os;
    os << base << "@t=" << t;
    return os.str();
}

} // namespace

const char* to_string(ProjectorMethod m) {
    switch (m) {
    case ProjectorMethod::spectral: return "spectral";
    case ProjectorMethod::quadrature: return "quadrature";
    case ProjectorMethod::power_average: return "power_average";
    }
    return "unknown";
}

MeanProjector mean_projector(const Superoperator& L, ProjectorMethod method, double quadrature_horizon) {
    if (method == ProjectorMethod::power_average) {
        throw Error("mean_projector: power_average applies to channels only");
    }
    const EigenDecomposition e = eigendecompose(L.matrix());
    const double zero_tol = tolerances().zero_eigenvalue * std::max(1.0, one_norm(L.matrix()));

    std::vector<Index> cluster;
    double gap = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < e.values.size(); ++j) {
        if (std::abs(e.values(j)) < zero_tol) {
            cluster.push_back(j);
        } else {
            gap = std::min(gap, -e.values(j).real());
        }
    }

    MeanProjector out;
    out.spectral_gap = gap;
    const bool spectral_ok = e.condition <= tolerances().near_defective && !cluster.empty();
    if (method == ProjectorMethod::spectral && spectral_ok) {
        out.P = spectral_projector(e, cluster, L.dim());
        out.method = ProjectorMethod::spectral;
    } else {
        out.P = quadrature_projector(L, quadrature_horizon);
        out.method = ProjectorMethod::quadrature;
    }
    continuous_residuals(out, L);
    return out;
}

MeanProjector discrete_mean_projector(const Superoperator& T, ProjectorMethod method, std::size_t power_terms) {
    if (method == ProjectorMethod::quadrature) {
        throw Error("discrete_mean_projector: quadrature applies to generators only");
    }
    if (power_terms == 0) throw Error("discrete_mean_projector: need at least one term");
    const EigenDecomposition e = eigendecompose(T.matrix());
    const double one_tol = tolerances().zero_eigenvalue * std::max(1.0, one_norm(T.matrix()));

    std::vector<Index> cluster;
    double largest_other = 0.0;
    for (Index j = 0; j < e.values.size(); ++j) {
        if (std::abs(e.values(j) - 1.0) < one_tol) {
            cluster.push_back(j);
        } else {
            largest_other = std::max(largest_other, std::abs(e.values(j)));
        }
    }

    MeanProjector out;
    out.discrete = true;
    out.spectral_gap = 1.0 - largest_other;
    const bool spectral_ok = e.condition <= tolerances().near_defective && !cluster.empty();
    if (method == ProjectorMethod::spectral && spectral_ok) {
        out.P = spectral_projector(e, cluster, T.dim());
        out.method = ProjectorMethod::spectral;
    } else {
        out.P = power_average(T, power_terms);
        out.method = ProjectorMethod::power_average;
    }
    discrete_residuals(out, T);
    return out;
}

EquilibriumBasis equilibrium_basis(const MeanProjector& P) {
    const Index d = P.P.dim();
    std::vector<ComplexVector> probes;
    for (Index j = 0; j < d; ++j) {
        ComplexVector e = ComplexVector::Zero(d);
        e(j) = 1.0;
        probes.push_back(e);
    }
    for (Index j = 0; j < d; ++j) {
        for (Index k = j + 1; k < d; ++k) {
            ComplexVector plus = ComplexVector::Zero(d);
            plus(j) = 1.0;
            plus(k) = 1.0;
            probes.push_back(plus);
            ComplexVector twisted = ComplexVector::Zero(d);
            twisted(j) = 1.0;
            twisted(k) = Complex(0.0, 1.0);
            probes.push_back(twisted);
        }
    }

    EquilibriumBasis out;
    std::vector<RealVector> orthonormal;
    for (const auto& psi : probes) {
        const ComplexMatrix image = P.P(DensityMatrix::pure(psi));
        RealVector v = hermitian_coordinates(hermitian_part(image));
        const double scale = v.norm();
        for (const auto& q : orthonormal) v -= q.dot(v) * q;
        if (v.norm() <= kBasisIndependence * std::max(1.0, scale)) continue;
        orthonormal.push_back(v.normalized());
        out.states.push_back(project_density(image));
    }
    if (out.states.empty()) {
        throw Error("equilibrium_basis: fixed space is empty (P annihilates every state)");
    }
    out.unique = out.states.size() == 1;
    return out;
}

DensityMatrix time_average(const SampledPath& path, double t) {
    if (path.times.empty()) throw Error("time_average: empty path");
    if (t > path.horizon() * (1.0 + 1e-12)) throw Error("time_average: t exceeds the path horizon");
    if (t <= 0.0) return path.states.front();
    return project_density(integral_to(path, t) / t);
}

DensityMatrix theta_infinity(const SampledPath& path, const MeanProjector& P) {
    if (path.states.empty()) throw Error("theta_infinity: empty path");
    return project_density(P.P(path.states.back()));
}

double generator_average_residual(const SampledPath& path, const Superoperator& L, double t) {
    if (!(t > 0.0)) throw Error("generator_average_residual: t must be positive");
    if (t > path.horizon() * (1.0 + 1e-12)) throw Error("generator_average_residual: t exceeds the path horizon");
    return operator_norm(L(integral_to(path, t))) / t;
}

// ------------------------------ report ---------------------------------------

PathStatistics path_statistics(const SampledPath& path, const ReportContext& ctx) {
    const double horizon = path.horizon();
    PathStatistics out{time_average(path, horizon), theta_infinity(path, ctx.projector), 0.0, 0.0, {}};
    out.distance = trace_distance(out.time_average, out.theta_infinity);
    out.residual = horizon > 0.0 ? generator_average_residual(path, ctx.generator, horizon) : 0.0;

    const ComplexMatrix p0 = ctx.projector.P(ctx.theta0);
    std::vector<std::vector<std::size_t>> counts;
    if (!ctx.jumps.empty()) counts = cumulative_counts(path, ctx.jumps.size());
    for (double t : ctx.thresholds.martingale_times) {
        if (t > horizon * (1.0 + 1e-12)) continue;
        const std::size_t node = path.node_at_or_before(t);
        const ComplexMatrix state = state_at(path, t);
        const ComplexMatrix integral = integral_to(path, t);
        Checkpoint cp;
        cp.time = t;
        cp.projected_increment = ctx.projector.P(state) - p0;
        cp.martingale = state - ctx.theta0.matrix() - ctx.generator(integral);
        for (std::size_t i = 0; i < ctx.jumps.size(); ++i) {
            cp.compensated_counts.push_back(static_cast<double>(counts[i][node]) -
                                            ctx.jumps[i](integral).trace().real());
        }
        out.checkpoints.push_back(std::move(cp));
    }
    return out;
}

PathStatistics chain_statistics(const discrete::DiscreteChain& chain, const ReportContext& ctx) {
    const std::size_t steps = chain.states.size() - 1;
    if (steps == 0) throw Error("chain_statistics: chain has no steps");
    const Index d = chain.states.front().dim();

    // Prefix sums Σ_{m<n} Θ_m for the checkpoints and the horizon.
    std::vector<std::size_t> wanted;
    for (double t : ctx.thresholds.martingale_times) {
        const auto n = static_cast<std::size_t>(std::llround(t));
        if (t >= 0.0 && n <= steps) wanted.push_back(n);
    }
    ComplexMatrix prefix = ComplexMatrix::Zero(d, d);
    std::vector<ComplexMatrix> prefix_at(wanted.size());
    for (std::size_t n = 0; n <= steps; ++n) {
        for (std::size_t w = 0; w < wanted.size(); ++w) {
            if (wanted[w] == n) prefix_at[w] = prefix;
        }
        if (n < steps) prefix += chain.states[n].matrix();
    }

    PathStatistics out{discrete::cesaro(chain, steps), project_density(ctx.projector.P(chain.states.back())),
                       0.0, 0.0, {}};
    out.distance = trace_distance(out.time_average, out.theta_infinity);
    out.residual = operator_norm(ctx.generator(prefix)) / static_cast<double>(steps);

    const ComplexMatrix p0 = ctx.projector.P(ctx.theta0);
    for (std::size_t w = 0; w < wanted.size(); ++w) {
        const ComplexMatrix& state = chain.states[wanted[w]].matrix();
        Checkpoint cp;
        cp.time = static_cast<double>(wanted[w]);
        cp.projected_increment = ctx.projector.P(state) - p0;
        cp.martingale = state - ctx.theta0.matrix() - ctx.generator(prefix_at[w]);
        out.checkpoints.push_back(std::move(cp));
    }
    return out;
}

std::pair<double, double> mean_and_standard_error(std::span<const double> xs) {
    if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

const Statistic* EquilibriumReport::find(const std::string& name) const {
    for (const auto& s : statistics) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

EquilibriumReport ergodic_report(std::span<const PathStatistics> stats, const ReportContext& ctx) {
    if (stats.empty()) throw Error("ergodic_report: empty ensemble");
    const ReportThresholds& thr = ctx.thresholds;
    const auto n = static_cast<double>(stats.size());
    EquilibriumReport report;
    report.paths = stats.size();
    auto& out = report.statistics;

    auto informational = [&](std::string name, double value) {
        out.push_back(Statistic{std::move(name), value, std::nullopt, std::nullopt, true});
    };
    auto fraction_test = [&](std::string name, double fraction, double required) {
        const double se = std::sqrt(fraction * (1.0 - fraction) / n);
        out.push_back(Statistic{std::move(name), fraction, se, required, fraction >= required});
    };
    auto zero_mean_test = [&](std::string name, const std::vector<double>& xs, double target) {
        const auto [mean, se] = mean_and_standard_error(xs);
        const double deviation = mean - target;
        const double allowed = thr.sigma * se + thr.zero_se_floor;
        out.push_back(Statistic{std::move(name), deviation, se, allowed, std::abs(deviation) <= allowed});
    };
    // Upper triangle of a Hermitian-valued sample, real parts and off-diagonal imaginary parts.
    auto matrix_tests = [&](const std::string& base, auto&& sample, const ComplexMatrix& target) {
        const Index d = target.rows();
        std::vector<double> xs(stats.size());
        for (Index r = 0; r < d; ++r) {
            for (Index c = r; c < d; ++c) {
                for (int part = 0; part < (r == c ? 1 : 2); ++part) {
                    for (std::size_t p = 0; p < stats.size(); ++p) {
                        const Complex z = sample(p)(r, c);
                        xs[p] = part == 0 ? z.real() : z.imag();
                    }
                    const Complex tz = target(r, c);
                    zero_mean_test(entry_name(base, r, c, part == 0 ? "re" : "im"), xs,
                                   part == 0 ? tz.real() : tz.imag());
                }
            }
        }
    };

    informational("spectral_gap", ctx.projector.spectral_gap);

    std::vector<double> distances;
    std::vector<double> residuals;
    for (const auto& s : stats) {
        distances.push_back(s.distance);
        residuals.push_back(s.residual);
    }
    informational("time_average_distance_median", median(distances));
    informational("time_average_distance_max", *std::max_element(distances.begin(), distances.end()));
    const auto within = [](const std::vector<double>& xs, double limit) {
        return static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double x) { return x <= limit; })) /
               static_cast<double>(xs.size());
    };
    fraction_test("time_average_within_distance_fraction", within(distances, thr.distance),
                  thr.distance_fraction);

    const ComplexMatrix p0 = ctx.projector.P(ctx.theta0);
    matrix_tests("theta_infinity_mean_deviation", [&](std::size_t p) -> const ComplexMatrix& {
        return stats[p].theta_infinity.matrix();
    }, p0);

    informational("generator_residual_median", median(residuals));
    fraction_test("generator_residual_within_fraction", within(residuals, thr.residual), thr.residual_fraction);

    const std::size_t checkpoints = stats.front().checkpoints.size();
    for (const auto& s : stats) {
        if (s.checkpoints.size() != checkpoints) {
            throw Error("ergodic_report: paths disagree on checkpoint times (unequal horizons?)");
        }
    }
    const Index d = ctx.theta0.dim();
    const ComplexMatrix zero = ComplexMatrix::Zero(d, d);
    for (std::size_t c = 0; c < checkpoints; ++c) {
        const double t = stats.front().checkpoints[c].time;
        const std::size_t detectors = stats.front().checkpoints[c].compensated_counts.size();
        for (std::size_t i = 0; i < detectors; ++i) {
            std::vector<double> xs;
            for (const auto& s : stats) xs.push_back(s.checkpoints[c].compensated_counts[i]);
            std::ostringstream name;
            name << "compensated_count[" << i + 1 << "]";
            zero_mean_test(at_time(name.str(), t), xs, 0.0);
        }
        matrix_tests(at_time("projected_increment", t), [&](std::size_t p) -> const ComplexMatrix& {
            return stats[p].checkpoints[c].projected_increment;
        }, zero);
        matrix_tests(at_time("martingale_M", t), [&](std::size_t p) -> const ComplexMatrix& {
            return stats[p].checkpoints[c].martingale;
        }, zero);
    }

    report.pass = std::all_of(out.begin(), out.end(), [](const Statistic& s) { return s.pass; });
    return report;
}

EquilibriumReport ergodic_report(std::span<const SampledPath> paths, const ReportContext& ctx) {
    std::vector<PathStatistics> stats;
    stats.reserve(paths.size());
    for (const auto& p : paths) stats.push_back(path_statistics(p, ctx));
    return ergodic_report(stats, ctx);
}

} // namespace qtraj::ergodic
