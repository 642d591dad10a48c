#include "qtraj/diffusive.hpp"

#include <cmath>
#include <sstream>

#include "qtraj/random.hpp"

namespace qtraj::diffusive {

namespace {

// Scratch space reused across Euler-Maruyama steps of one trajectory.
struct StepWorkspace {
    ComplexVector drift;
    ComplexMatrix sym;
    ComplexMatrix next;
};

void step_into(const ComplexMatrix& theta, const ComplexMatrix& generator, std::span<const ComplexMatrix> vs,
               double dt, std::span<const double> gaussians, StepWorkspace& ws) {
    ws.drift.noalias() = generator * theta.reshaped();
    ws.next = theta;
    ws.next.reshaped() += dt * ws.drift;
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (gaussians[i] == 0.0) continue;
        ws.sym.noalias() = theta * vs[i].adjoint();
        ws.sym.noalias() += vs[i] * theta;
        const Complex tr = ws.sym.trace();
        ws.next += (sqrt_dt * gaussians[i]) * (ws.sym - tr * theta);
    }
}

} // namespace

void DiffusiveStepConfig::validate() const {
    if (!(dt > 0.0) || dt > 0.1) throw Error("diffusive: dt must lie in (0, 0.1]");
    if (repair_every < 1) throw Error("diffusive: repair_every must be at least 1");
    if (!(horizon > 0.0)) throw Error("diffusive: horizon must be positive");
    if (!(grid_step > 0.0)) throw Error("diffusive: grid_step must be positive");
}

ComplexMatrix diffusion_coefficient(const ComplexMatrix& theta, const ComplexMatrix& v) {
    if (theta.rows() != v.rows() || theta.cols() != v.cols() || theta.rows() != theta.cols()) {
        throw DimensionError("diffusion_coefficient: dimension mismatch");
    }
    const ComplexMatrix sym = theta * v.adjoint() + v * theta;
    return sym - sym.trace() * theta;
}

ComplexMatrix em_step(const ComplexMatrix& theta, const Superoperator& L, std::span<const ComplexMatrix> vs,
                      double dt, std::span<const double> gaussians) {
    if (!(dt > 0.0)) throw Error("em_step: dt must be positive");
    if (gaussians.size() != vs.size()) throw DimensionError("em_step: one Gaussian per jump operator");
    if (theta.rows() != L.dim() || theta.cols() != L.dim()) throw DimensionError("em_step: dimension mismatch");
    for (const auto& v : vs) {
        if (v.rows() != L.dim() || v.cols() != L.dim()) throw DimensionError("em_step: dimension mismatch");
    }
    StepWorkspace ws;
    step_into(theta, L.matrix(), vs, dt, gaussians, ws);
    return ws.next;
}

SampledPath simulate(const model::LindbladModel& m, const DensityMatrix& theta0,
                     const DiffusiveStepConfig& config, std::uint64_t seed) {
    config.validate();
    const Superoperator L = model::build_generator(m);
    if (theta0.dim() != L.dim()) throw DimensionError("diffusive::simulate: initial state dimension mismatch");

    const auto steps = std::max<std::int64_t>(1, std::llround(config.horizon / config.dt));
    const auto stride = std::max<std::int64_t>(1, std::llround(config.grid_step / config.dt));
    const std::span<const ComplexMatrix> vs(m.jump_operators);

    Rng rng(seed);
    std::vector<double> g(vs.size(), 0.0);
    StepWorkspace ws;
    ComplexMatrix theta = theta0.matrix();

    SampledPath path;
    path.times.reserve(static_cast<std::size_t>(steps / stride + 2));
    path.states.reserve(static_cast<std::size_t>(steps / stride + 2));
    path.times.push_back(0.0);
    path.states.push_back(theta0);

    auto guard = [&](std::int64_t step) {
        const double lo = theta.allFinite() ? min_hermitian_eigenvalue(theta) : -INFINITY;
        if (!(lo >= config.min_eig_guard)) {
            std::ostringstream os;
            os << "diffusive::simulate: eigenvalue " << lo << " below guard " << config.min_eig_guard
               << " at step " << step << " (dt too large?)";
            throw GuardAbort(os.str(), step);
        }
    };

    for (std::int64_t step = 1; step <= steps; ++step) {
        if (!config.noiseless) {
            for (double& x : g) x = rng.normal();
        }
        step_into(theta, L.matrix(), vs, config.dt, g, ws);
        theta.swap(ws.next);

        guard(step);
        const bool repair = step % config.repair_every == 0;
        const bool record = step % stride == 0 || step == steps;
        if (repair) theta = project_density(theta).matrix();
        if (record) {
            path.times.push_back(static_cast<double>(step) * config.dt);
            path.states.push_back(repair ? DensityMatrix::unchecked(theta) : project_density(theta));
        }
    }
    return path;
}

} // namespace qtraj::diffusive
