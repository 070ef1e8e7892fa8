// optimize.hpp — bias-selection strategies: "global" (bias toward the
// highest-precision sampled trajectory) and "local" (greedy one-step
// selection), plus the bias-strength sweep.

#pragma once

#include <string>

#include "qtbias/trajectory.hpp"

namespace qtbias {

enum class Strategy { global, local };

// The paper-level algorithms leave the one-step "sensitivity" quantity
// underdetermined; all three readings are selectable.
enum class LocalSensitivityMode {
    single_branch,  // (dlog p of the biased-toward branch)^2   [default]
    one_step_fi,    // sum_m p_m (dlog p_m)^2 over both branches
    weighted        // p_m (dlog p_m)^2 of the biased-toward branch
};

struct ConvergenceRow {
    std::string stage;  // "unbiased" or "biased"
    std::int64_t n_traj = 0;
    double fi = 0.0;
    double std_err = 0.0;
};

struct OptimizationReport {
    Strategy strategy = Strategy::global;
    double s = 0.0;
    std::vector<double> b;  // entries in {-1, +1}
    Bits m_max;
    FIEstimate fi_biased;
    FIEstimate fi_unbiased;
    std::vector<ConvergenceRow> diagnostics;
    bool step1_converged = true;  // relative-error target met within the cap
};

struct OptimizeOptions {
    std::int64_t n_traj = 10000;
    int n_batches = 10;
    std::uint64_t seed = 12345;
    double fd_step = 0.0;             // 0 -> default policy
    double target_rel_err = 0.01;     // stderr/mean target for the unbiased stage
    std::int64_t n_traj_cap = 1000000;  // escalation cap (doubling)
    int threads = 0;
    LocalSensitivityMode local_mode = LocalSensitivityMode::single_branch;
    std::uint64_t domain = 0;  // base RNG domain
};

// Outcome string of the record with the largest f_m; ties resolve to the
// lexicographically smallest bitstring.
Bits select_max_precision_trajectory(std::span<const TrajectoryRecord> records);

// Sample the unbiased ensemble (doubling n_traj until the relative-error
// target or the cap), pick m_max, set b_n = -1 where m_max clicked and +1
// where it did not, build the dressed map, re-estimate.
OptimizationReport run_global(const ModelParams& p, double s, const OptimizeOptions& opt);

// Greedy pass: at each collision compare the one-step dressed maps for
// b_n = ±1 from the current conditional state, keep the more sensitive
// branch, and advance along it; then estimate on the full dressed map.
OptimizationReport run_local(const ModelParams& p, double s, const OptimizeOptions& opt);

struct SweepPoint {
    double s = 0.0;
    bool ok = true;
    std::string error;  // set when ok == false
    OptimizationReport report;
};

// One report per s value (0 is inserted as baseline anchor when missing);
// per-point failures are recorded and the sweep continues.
std::vector<SweepPoint> sweep_bias_strength(const ModelParams& p, Strategy strategy,
                                            std::span<const double> s_values,
                                            const OptimizeOptions& opt);

}  // namespace qtbias
