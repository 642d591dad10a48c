// cli.hpp - command implementations behind the qtraj executable
//
// Every command writes its results to `out`, diagnostics to `err`, and
// returns the process exit code: 0 pass, 1 fail, 2 usage or parse error.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "qtraj/ergodic.hpp"

namespace qtraj::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public Error {
public:
    using Error::Error;
};

enum class Unraveling { jump, diffusive, discrete };

Unraveling parse_unraveling(const std::string& name);
const char* to_string(Unraveling u);

struct RunConfig {
    std::string model_path;
    Unraveling unraveling = Unraveling::jump;
    std::string theta0;
    std::optional<double> horizon;      // jump, diffusive
    std::optional<std::size_t> steps;   // discrete
    double dt = 1e-3;                   // diffusive
    std::int64_t repair_every = 10;     // diffusive
    double grid_step = 0.05;
    std::size_t trajectories = 1;
    std::optional<std::uint64_t> seed;  // mandatory; there is no clock default
    std::string out_dir;
    std::size_t workers = 1;

    // Throws UsageError when a field required by the unraveling is missing.
    void validate(bool require_output) const;
};

int cmd_validate(const std::string& model_path, std::ostream& out, std::ostream& err);
int cmd_equilibria(const std::string& model_path, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& config, const std::string& thresholds_path, std::ostream& out,
               std::ostream& err);

// Keys: distance, distance_fraction, residual, residual_fraction, sigma,
// zero_se_floor, martingale_times. Missing keys keep their defaults.
ergodic::ReportThresholds parse_thresholds(const std::string& text);

// trajectory_000000.jsonl, ...
std::string trajectory_file_name(std::size_t index);

} // namespace qtraj::cli
