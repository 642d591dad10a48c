#include "qtraj/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "qtraj/diffusive.hpp"
#include "qtraj/ensemble.hpp"
#include "qtraj/io.hpp"
#include "qtraj/jump.hpp"
#include "qtraj/random.hpp"

namespace qtraj::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

// Everything a run needs, loaded and validated once and then shared
// read-only by the workers.
struct Prepared {
    RunConfig config;
    std::string model_hash;
    Index dim = 0;
    DensityMatrix theta0 = DensityMatrix::maximally_mixed(1);
    model::LindbladModel lindblad;
    std::optional<jump::JumpUnraveling> unraveling;
    discrete::KrausModel kraus;
    Superoperator generator;  // L, or T - id for chains
};

Prepared prepare(const RunConfig& config, bool require_output) {
    config.validate(require_output);
    Prepared p;
    p.config = config;
    const std::string text = io::read_file(config.model_path);
    p.model_hash = io::content_hash(text);
    io::ModelFile file;
    try {
        file = io::parse_model(text);
    } catch (const ParseError& e) {
        throw ParseError(config.model_path + ": " + e.what());
    }

    if (auto* k = std::get_if<discrete::KrausModel>(&file)) {
        if (config.unraveling != Unraveling::discrete) {
            throw UsageError("a Kraus model file needs --unraveling discrete");
        }
        const discrete::KrausReport report = discrete::validate_kraus(*k);
        if (!report.ok) throw InvariantError("Kraus completeness", report.message);
        p.kraus = *k;
        p.dim = k->dim();
        p.generator = discrete::kraus_channel(*k) - Superoperator::identity(p.dim);
    } else {
        auto& lf = std::get<io::LindbladModelFile>(file);
        if (config.unraveling == Unraveling::discrete) {
            throw UsageError("--unraveling discrete needs a Kraus model file");
        }
        p.lindblad = lf.model;
        p.dim = lf.model.dim();
        if (config.unraveling == Unraveling::jump) {
            p.unraveling.emplace(model::build_decomposition(lf.model, lf.decomposition));
            p.generator = p.unraveling->decomposition().generator();
        } else {
            p.generator = model::build_generator(lf.model);
        }
    }
    p.theta0 = io::parse_state(config.theta0, p.dim);
    return p;
}

using Trajectory = std::variant<SampledPath, discrete::DiscreteChain>;

Trajectory run_trajectory(const Prepared& p, std::size_t index) {
    const std::uint64_t seed = stream_seed(*p.config.seed, index);
    try {
        switch (p.config.unraveling) {
        case Unraveling::jump: {
            jump::JumpConfig jc;
            jc.horizon = *p.config.horizon;
            jc.grid_step = p.config.grid_step;
            return jump::simulate(*p.unraveling, p.theta0, jc, seed);
        }
        case Unraveling::diffusive: {
            diffusive::DiffusiveStepConfig dc;
            dc.dt = p.config.dt;
            dc.repair_every = p.config.repair_every;
            dc.horizon = *p.config.horizon;
            dc.grid_step = p.config.grid_step;
            return diffusive::simulate(p.lindblad, p.theta0, dc, seed);
        }
        case Unraveling::discrete:
            return discrete::simulate_chain(p.kraus, p.theta0, *p.config.steps, seed);
        }
    } catch (const Error& e) {
        std::ostringstream os;
        os << "trajectory " << index << " (seed " << *p.config.seed << ", stream seed " << seed
           << ") failed: " << e.what();
        throw Error(os.str());
    }
    throw Error("unknown unraveling");
}

ordered_json header_record(const Prepared& p, std::size_t index) {
    const RunConfig& c = p.config;
    ordered_json h;
    h["record"] = "header";
    h["format"] = "qtraj-trajectory-1";
    h["model"] = c.model_path;
    h["model_hash"] = p.model_hash;
    h["unraveling"] = to_string(c.unraveling);
    h["dim"] = p.dim;
    h["theta0"] = c.theta0;
    if (c.unraveling == Unraveling::discrete) {
        h["steps"] = *c.steps;
    } else {
        h["horizon"] = *c.horizon;
        h["grid_step"] = c.grid_step;
    }
    if (c.unraveling == Unraveling::diffusive) {
        h["dt"] = c.dt;
        h["repair_every"] = c.repair_every;
    }
    if (c.unraveling == Unraveling::jump) h["detectors"] = p.unraveling->detectors();
    h["trajectories"] = c.trajectories;
    h["seed"] = *c.seed;
    h["trajectory"] = index;
    h["stream_seed"] = stream_seed(*c.seed, index);
    return h;
}

ordered_json state_json(const DensityMatrix& rho) {
    return ordered_json::parse(io::matrix_to_json(rho.matrix()).dump());
}

void write_trajectory(const Prepared& p, std::size_t index, const Trajectory& traj,
                      const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + file.string());
    out << header_record(p, index).dump() << '\n';

    if (const auto* chain = std::get_if<discrete::DiscreteChain>(&traj)) {
        for (std::size_t n = 0; n < chain->states.size(); ++n) {
            ordered_json r;
            r["n"] = n;
            r["state"] = state_json(chain->states[n]);
            r["outcome"] = n == 0 ? ordered_json(nullptr) : ordered_json(chain->outcomes[n - 1] + 1);
            out << r.dump() << '\n';
        }
        return;
    }

    const auto& path = std::get<SampledPath>(traj);
    const bool jump_mode = p.config.unraveling == Unraveling::jump;
    std::vector<std::vector<std::size_t>> counts;
    if (jump_mode) counts = cumulative_counts(path, p.unraveling->detectors());
    std::size_t next_click = 0;
    for (std::size_t n = 0; n < path.size(); ++n) {
        ordered_json r;
        r["t"] = path.times[n];
        r["state"] = state_json(path.states[n]);
        if (jump_mode) {
            ordered_json c = ordered_json::array();
            for (const auto& per_detector : counts) c.push_back(per_detector[n]);
            r["counts"] = std::move(c);
            if (next_click < path.click_nodes.size() && path.click_nodes[next_click] == n) {
                r["click"] = path.record[next_click].detector + 1;
                ++next_click;
            }
        }
        out << r.dump() << '\n';
    }
    if (!out) throw Error("write failed: " + file.string());
}

ergodic::ReportContext report_context(const Prepared& p, ergodic::ReportThresholds thresholds) {
    ergodic::ReportContext ctx{
        p.config.unraveling == Unraveling::discrete
            ? ergodic::discrete_mean_projector(p.generator + Superoperator::identity(p.dim))
            : ergodic::mean_projector(p.generator),
        p.theta0, p.generator, {}, std::move(thresholds)};
    if (p.unraveling) ctx.jumps = p.unraveling->decomposition().jumps;
    return ctx;
}

ordered_json projector_json(const ergodic::MeanProjector& P) {
    ordered_json j;
    j["method"] = ergodic::to_string(P.method);
    j["spectral_gap"] = P.spectral_gap;
    j["idempotence_residual"] = P.idempotence_residual;
    j["invariance_residual"] = P.invariance_residual;
    return j;
}

// Runs `body`, mapping exceptions to exit codes and messages on `err`.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvariantError& e) {
        err << "invalid model: invariant '" << e.invariant() << "' failed: " << e.what() << '\n';
        return kExitFail;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFail;
    }
}

void print_check(std::ostream& out, const std::string& name, bool pass, double deviation, double tolerance) {
    out << (pass ? "PASS " : "FAIL ") << name << "  deviation=" << std::setprecision(6) << deviation
        << "  tolerance=" << tolerance << '\n';
}

} // namespace

Unraveling parse_unraveling(const std::string& name) {
    if (name == "jump") return Unraveling::jump;
    if (name == "diffusive") return Unraveling::diffusive;
    if (name == "discrete") return Unraveling::discrete;
    throw UsageError("unknown unraveling '" + name + "' (expected jump, diffusive or discrete)");
}

const char* to_string(Unraveling u) {
    switch (u) {
    case Unraveling::jump: return "jump";
    case Unraveling::diffusive: return "diffusive";
    case Unraveling::discrete: return "discrete";
    }
    return "?";
}

void RunConfig::validate(bool require_output) const {
    if (model_path.empty()) throw UsageError("--model is required");
    if (theta0.empty()) throw UsageError("--theta0 is required");
    if (!seed) throw UsageError("--seed is required");
    if (trajectories == 0) throw UsageError("--trajectories must be at least 1");
    if (workers == 0) throw UsageError("--workers must be at least 1");
    if (require_output && out_dir.empty()) throw UsageError("--out is required");
    if (unraveling == Unraveling::discrete) {
        if (!steps || *steps == 0) throw UsageError("discrete runs need --steps N with N >= 1");
        return;
    }
    if (!horizon || !(*horizon > 0.0) || !std::isfinite(*horizon)) {
        throw UsageError("--horizon must be a positive number");
    }
    if (!(grid_step > 0.0)) throw UsageError("--grid-step must be positive");
    if (unraveling == Unraveling::diffusive) {
        if (!(dt > 0.0) || dt > 0.1) throw UsageError("--dt must lie in (0, 0.1]");
        if (repair_every < 1) throw UsageError("--repair-every must be at least 1");
    }
}

std::string trajectory_file_name(std::size_t index) {
    std::ostringstream os;
    os << "trajectory_" << std::setw(6) << std::setfill('0') << index << ".jsonl";
    return os.str();
}

ergodic::ReportThresholds parse_thresholds(const std::string& text) {
    io::json j;
    try {
        j = io::json::parse(text);
    } catch (const io::json::parse_error& e) {
        throw ParseError(std::string("thresholds: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("thresholds: expected a JSON object");
    ergodic::ReportThresholds t;
    auto number = [&](const char* key, double& field) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw ParseError(std::string("thresholds field /") + key + ": expected a number");
        field = j[key].get<double>();
    };
    number("distance", t.distance);
    number("distance_fraction", t.distance_fraction);
    number("residual", t.residual);
    number("residual_fraction", t.residual_fraction);
    number("sigma", t.sigma);
    number("zero_se_floor", t.zero_se_floor);
    if (j.contains("martingale_times")) {
        const auto& times = j["martingale_times"];
        if (!times.is_array()) throw ParseError("thresholds field /martingale_times: expected an array");
        for (const auto& x : times) {
            if (!x.is_number() || !(x.get<double>() >= 0.0)) {
                throw ParseError("thresholds field /martingale_times: expected non-negative numbers");
            }
            t.martingale_times.push_back(x.get<double>());
        }
    }
    return t;
}

int cmd_validate(const std::string& model_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const io::ModelFile file = io::load_model(model_path);
        if (const auto* k = std::get_if<discrete::KrausModel>(&file)) {
            const discrete::KrausReport r = discrete::validate_kraus(*k);
            print_check(out, "Kraus completeness", r.ok, r.max_deviation, tolerances().kraus);
            out << (r.ok ? "valid" : "invalid") << '\n';
            return r.ok ? kExitPass : kExitFail;
        }
        const auto& lf = std::get<io::LindbladModelFile>(file);
        const model::ValidationReport r = model::validate(lf.model, lf.decomposition);
        for (const auto& c : r.checks) print_check(out, c.name, c.pass, c.deviation, c.tolerance);
        if (const model::Check* f = r.first_failure()) {
            out << "invalid: " << f->name << '\n';
            return kExitFail;
        }
        out << "valid\n";
        return kExitPass;
    });
}

int cmd_equilibria(const std::string& model_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const io::ModelFile file = io::load_model(model_path);
        ergodic::MeanProjector primary;
        ergodic::MeanProjector secondary;
        ordered_json j;
        if (const auto* k = std::get_if<discrete::KrausModel>(&file)) {
            const discrete::KrausReport r = discrete::validate_kraus(*k);
            if (!r.ok) throw InvariantError("Kraus completeness", r.message);
            const Superoperator T = discrete::kraus_channel(*k);
            primary = ergodic::discrete_mean_projector(T, ergodic::ProjectorMethod::spectral);
            secondary = ergodic::discrete_mean_projector(T, ergodic::ProjectorMethod::power_average);
            j["model"] = "kraus";
            j["dim"] = k->dim();
        } else {
            const auto& lf = std::get<io::LindbladModelFile>(file);
            const model::ValidationReport r = model::validate(lf.model, lf.decomposition);
            if (const model::Check* f = r.first_failure()) {
                std::ostringstream os;
                os << "deviation " << f->deviation << " exceeds " << f->tolerance;
                throw InvariantError(f->name, os.str());
            }
            const Superoperator L = model::build_generator(lf.model);
            primary = ergodic::mean_projector(L, ergodic::ProjectorMethod::spectral);
            secondary = ergodic::mean_projector(L, ergodic::ProjectorMethod::quadrature);
            j["model"] = "lindblad";
            j["dim"] = lf.model.dim();
        }
        const ergodic::EquilibriumBasis basis = ergodic::equilibrium_basis(primary);
        j["unique"] = basis.unique;
        j["equilibrium_dimension"] = basis.states.size();
        ordered_json states = ordered_json::array();
        for (const auto& s : basis.states) states.push_back(state_json(s));
        j["basis"] = std::move(states);
        j["spectral_gap"] = primary.spectral_gap;
        j["projector"] = projector_json(primary);
        j["cross_check"] = projector_json(secondary);
        j["method_agreement"] = (primary.P.matrix() - secondary.P.matrix()).cwiseAbs().maxCoeff();
        out << j.dump(2) << '\n';
        return kExitPass;
    });
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Prepared p = prepare(config, true);
        const std::filesystem::path dir(config.out_dir);
        std::filesystem::create_directories(dir);
        const auto files = run_ensemble(config.trajectories, config.workers, [&](std::size_t i) {
            const std::filesystem::path file = dir / trajectory_file_name(i);
            write_trajectory(p, i, run_trajectory(p, i), file);
            return file.string();
        });
        for (const auto& f : files) out << f << '\n';
        return kExitPass;
    });
}

int cmd_verify(const RunConfig& config, const std::string& thresholds_path, std::ostream& out,
               std::ostream& err) {
    return guarded(err, [&] {
        const Prepared p = prepare(config, false);
        ergodic::ReportThresholds thresholds;
        if (!thresholds_path.empty()) thresholds = parse_thresholds(io::read_file(thresholds_path));
        const ergodic::ReportContext ctx = report_context(p, std::move(thresholds));

        const auto stats = run_ensemble(config.trajectories, config.workers, [&](std::size_t i) {
            const Trajectory traj = run_trajectory(p, i);
            if (const auto* chain = std::get_if<discrete::DiscreteChain>(&traj)) {
                return ergodic::chain_statistics(*chain, ctx);
            }
            return ergodic::path_statistics(std::get<SampledPath>(traj), ctx);
        });
        const ergodic::EquilibriumReport report = ergodic::ergodic_report(stats, ctx);

        ordered_json j;
        j["model"] = config.model_path;
        j["unraveling"] = to_string(config.unraveling);
        j["trajectories"] = config.trajectories;
        j["seed"] = *config.seed;
        j["projector"] = projector_json(ctx.projector);
        j["report"] = ordered_json::parse(io::report_to_json(report).dump());
        const std::string text = j.dump(2);
        out << text << '\n';
        if (!config.out_dir.empty()) {
            std::filesystem::create_directories(config.out_dir);
            std::ofstream f(std::filesystem::path(config.out_dir) / "report.json", std::ios::binary);
            f << text << '\n';
        }
        for (const auto& s : report.statistics) {
            if (!s.pass) err << "FAIL " << s.name << " = " << s.value << '\n';
        }
        return report.pass ? kExitPass : kExitFail;
    });
}

} // namespace qtraj::cli
