// qtraj - quantum trajectory simulation and ergodic verification
//
//   qtraj validate <model>
//   qtraj equilibria <model>
//   qtraj simulate --model M --unraveling U --theta0 S --horizon T [--dt D]
//                  [--grid-step G] [--steps N] --trajectories K --seed Z --out DIR [--workers W]
//   qtraj verify <simulate flags> --thresholds FILE
//
// Tolerance constants can be overridden through QTRAJ_TOL_<NAME> environment
// variables (see README). Exit codes: 0 pass, 1 fail, 2 usage or parse error.

#include <iostream>

#include <CLI11.hpp>

#include "qtraj/cli.hpp"

namespace {

struct RunFlags {
    qtraj::cli::RunConfig config;
    std::string unraveling;
    double horizon = 0.0;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool out_required) {
    cmd->add_option("--model", f.config.model_path, "model file (JSON)")->required();
    cmd->add_option("--unraveling", f.unraveling, "jump | diffusive | discrete")->required();
    cmd->add_option("--theta0", f.config.theta0, "basis:n | plus | mixed | JSON matrix")->required();
    cmd->add_option("--horizon", f.horizon, "final time (jump, diffusive)");
    cmd->add_option("--steps", f.steps, "number of steps (discrete)");
    cmd->add_option("--dt", f.config.dt, "Euler-Maruyama step (diffusive)")->capture_default_str();
    cmd->add_option("--repair-every", f.config.repair_every, "steps between state repairs (diffusive)")
        ->capture_default_str();
    cmd->add_option("--grid-step", f.config.grid_step, "output grid spacing")->capture_default_str();
    cmd->add_option("--trajectories", f.config.trajectories, "number of trajectories")->required();
    cmd->add_option("--seed", f.seed, "64-bit master seed")->required();
    auto* out = cmd->add_option("--out", f.config.out_dir, "output directory");
    if (out_required) out->required();
    cmd->add_option("--workers", f.config.workers, "worker threads")->capture_default_str();
}

// Copies parsed flags into the config; optional fields stay empty when unset.
qtraj::cli::RunConfig finish(RunFlags& f, const CLI::App* cmd) {
    f.config.unraveling = qtraj::cli::parse_unraveling(f.unraveling);
    f.config.seed = f.seed;
    if (cmd->count("--horizon") > 0) f.config.horizon = f.horizon;
    if (cmd->count("--steps") > 0) f.config.steps = f.steps;
    return f.config;
}

} // namespace

int main(int argc, char** argv) {
    try {
        qtraj::set_tolerances(qtraj::tolerances_from_env());
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return qtraj::cli::kExitUsage;
    }

    CLI::App app{"Quantum trajectory simulation and ergodic verification"};
    app.require_subcommand(1);

    std::string model_path;
    auto* validate = app.add_subcommand("validate", "check model invariants");
    validate->add_option("model", model_path, "model file")->required();

    auto* equilibria = app.add_subcommand("equilibria", "print the equilibrium space");
    equilibria->add_option("model", model_path, "model file")->required();

    RunFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "write seeded trajectories as JSONL");
    add_run_flags(simulate, sim_flags, true);

    RunFlags verify_flags;
    std::string thresholds;
    auto* verify = app.add_subcommand("verify", "run the ensemble and the ergodic report");
    add_run_flags(verify, verify_flags, false);
    verify->add_option("--thresholds", thresholds, "thresholds file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qtraj::cli::kExitUsage;
    }

    try {
        if (validate->parsed()) return qtraj::cli::cmd_validate(model_path, std::cout, std::cerr);
        if (equilibria->parsed()) return qtraj::cli::cmd_equilibria(model_path, std::cout, std::cerr);
        if (simulate->parsed()) {
            return qtraj::cli::cmd_simulate(finish(sim_flags, simulate), std::cout, std::cerr);
        }
        return qtraj::cli::cmd_verify(finish(verify_flags, verify), thresholds, std::cout, std::cerr);
    } catch (const qtraj::cli::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return qtraj::cli::kExitUsage;
    }
}
