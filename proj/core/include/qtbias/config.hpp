// config.hpp — experiment configuration: a JSON document with strict schema
// validation, canonical emission, and a stable fingerprint.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtbias/collision.hpp"
#include "qtbias/optimize.hpp"

namespace qtbias {

enum class BiasMode { none, explicit_b, global, local };

std::string to_string(BiasMode mode);
std::string to_string(LocalSensitivityMode mode);

struct ExperimentConfig {
    ModelParams model;  // defaults: omega=10, gamma=1, dt=1, N=20, psi0=|g>

    // bias
    BiasMode bias_mode = BiasMode::none;
    double bias_s = 0.0;
    std::vector<double> bias_b;  // explicit mode only; length n_collisions
    LocalSensitivityMode local_mode = LocalSensitivityMode::single_branch;

    // estimation
    std::int64_t n_traj = 10000;
    int n_batches = 10;
    std::uint64_t seed = 12345;
    double fd_step = 0.0;  // 0 = automatic policy
    int enumeration_cap = 24;
    double target_rel_err = 0.01;
    std::int64_t n_traj_cap = 1000000;

    // sweep
    std::vector<double> sweep_s;

    // dynamics experiments
    double t_final = 5.0;
    double dt_int = 1e-3;
    int snapshot_stride = 10;
    std::vector<double> limit_dt = {1e-2, 5e-3, 2.5e-3};

    // collapse experiment
    std::string collapse_input;
    double a_min = -4.0, a_max = 4.0;
    double b_min = -4.0, b_max = 4.0;
    int collapse_grid = 41;

    // outputs
    std::string out_dir = "out";
    std::vector<std::string> formats = {"csv", "json"};
    int threads = 0;
    std::int64_t trajectory_dump = 1000;
    int histogram_bins = 50;
    bool histogram_log10 = false;
};

// Parses and validates a JSON document; unknown keys are rejected with their
// field path.  An empty object yields the full default configuration.
ExperimentConfig parse_config(const std::string& json_text);

// Canonical JSON (sorted keys, stable number formatting); parse(emit(c))
// round-trips to an identical config.
std::string emit_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical form with output placement and worker count
// blanked (they cannot alter any number); stable across runs and platforms.
std::uint64_t config_fingerprint(const ExperimentConfig& cfg);

}  // namespace qtbias
