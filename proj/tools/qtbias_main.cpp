// qtbias — command-line front end.  Loads a JSON config (or the defaults),
// applies flag overrides, runs one named experiment, prints the summary.
//
// Exit codes: 0 success, 1 hard error (JSON on stderr), 2 failed checks.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtbias/errors.hpp"
#include "qtbias/experiment.hpp"

using namespace qtbias;

namespace {

struct Overrides {
    std::optional<double> omega, gamma, dt, s, fd_step, t_final, dt_int;
    std::optional<int> n, n_batches, threads, grid;
    std::optional<std::int64_t> n_traj;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir, s_values, b_values, dt_list, strategy, input,
        a_range, b_range, mode;
    std::vector<std::string> formats;
};

std::vector<double> parse_value_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        // start:step:stop, inclusive of the endpoint within a half-step
        double start = 0, step = 0, stop = 0;
        if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &step, &stop) != 3 ||
            step <= 0.0)
            throw ConfigError(what, "expected start:step:stop with step > 0");
        for (double v = start; v <= stop + 0.5 * step; v += step) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (...) {
            throw ConfigError(what, "expected a comma list or start:step:stop");
        }
    }
    if (out.empty()) throw ConfigError(what, "empty list");
    return out;
}

ExperimentConfig build_config(const std::string& config_path, const Overrides& ov,
                              const std::string& subcommand) {
    std::string text = "{}";
    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw Error("cannot read config file: " + config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    ExperimentConfig cfg = parse_config(text);

    if (ov.omega) cfg.model.omega = *ov.omega;
    if (ov.gamma) cfg.model.gamma = *ov.gamma;
    if (ov.dt) cfg.model.dt = *ov.dt;
    if (ov.n) cfg.model.n_collisions = *ov.n;
    if (ov.s) cfg.bias_s = *ov.s;
    if (ov.mode) {
        const std::string& m = *ov.mode;
        cfg.bias_mode = m == "none"       ? BiasMode::none
                        : m == "explicit" ? BiasMode::explicit_b
                        : m == "global"   ? BiasMode::global
                        : m == "local"    ? BiasMode::local
                                          : throw ConfigError("--mode", "unknown bias mode");
    }
    if (ov.b_values) {
        cfg.bias_b = parse_value_list(*ov.b_values, "--b");
        cfg.bias_mode = BiasMode::explicit_b;
    }
    if (ov.n_traj) cfg.n_traj = *ov.n_traj;
    if (ov.n_batches) cfg.n_batches = *ov.n_batches;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.fd_step) cfg.fd_step = *ov.fd_step;
    if (ov.threads) cfg.threads = *ov.threads;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (!ov.formats.empty()) cfg.formats = ov.formats;
    if (ov.s_values) cfg.sweep_s = parse_value_list(*ov.s_values, "--s");
    if (ov.strategy) {
        if (*ov.strategy != "global" && *ov.strategy != "local")
            throw ConfigError("--strategy", "expected global|local");
        cfg.bias_mode = *ov.strategy == "global" ? BiasMode::global : BiasMode::local;
    }
    if (ov.t_final) cfg.t_final = *ov.t_final;
    if (ov.dt_int) cfg.dt_int = *ov.dt_int;
    if (ov.dt_list) cfg.limit_dt = parse_value_list(*ov.dt_list, "--dt-list");
    if (ov.input) cfg.collapse_input = *ov.input;
    if (ov.grid) cfg.collapse_grid = *ov.grid;
    if (ov.a_range) {
        const auto r = parse_value_list(*ov.a_range, "--a-range");
        if (r.size() != 2) throw ConfigError("--a-range", "expected lo,hi");
        cfg.a_min = r[0];
        cfg.a_max = r[1];
    }
    if (ov.b_range) {
        const auto r = parse_value_list(*ov.b_range, "--b-range");
        if (r.size() != 2) throw ConfigError("--b-range", "expected lo,hi");
        cfg.b_min = r[0];
        cfg.b_max = r[1];
    }

    // Basic cross-field hygiene the schema cannot see from flags alone.
    if (cfg.bias_mode == BiasMode::explicit_b &&
        static_cast<int>(cfg.bias_b.size()) != cfg.model.n_collisions)
        throw ConfigError("bias.b", "explicit mode requires b of length n_collisions");
    if (subcommand == "sweep" && cfg.bias_mode != BiasMode::global &&
        cfg.bias_mode != BiasMode::local)
        cfg.bias_mode = BiasMode::global;
    return cfg;
}

const char* classify(const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const DegenerateScheduleError*>(&e)) return "degenerate_schedule";
    if (dynamic_cast<const EnumerationCapError*>(&e)) return "enumeration_cap";
    if (dynamic_cast<const StepSizeError*>(&e)) return "step_size";
    if (dynamic_cast<const NoOverlapError*>(&e)) return "no_overlap";
    if (dynamic_cast<const NumericalDegradationError*>(&e)) return "numerical";
    return "error";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qtbias — biased quantum-trajectory sensing toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand

    std::string config_path;
    Overrides ov;
    app.add_option("--config", config_path, "JSON configuration file")->expected(1);
    app.add_option("--seed", ov.seed, "RNG seed (64-bit)");
    app.add_option("--threads", ov.threads, "worker thread cap (or QTBIAS_THREADS)");
    app.add_option("--out", ov.out_dir, "output directory");
    app.add_option("--format", ov.formats, "artifact formats (csv, json)")
        ->check(CLI::IsMember({"csv", "json"}));

    auto add_model_flags = [&](CLI::App* sub) {
        sub->add_option("--omega", ov.omega, "drive strength to estimate");
        sub->add_option("--gamma", ov.gamma, "dissipation rate");
        sub->add_option("--dt", ov.dt, "collision duration");
        sub->add_option("--n", ov.n, "number of collisions");
        sub->add_option("--n-traj", ov.n_traj, "trajectories per estimate");
        sub->add_option("--n-batches", ov.n_batches, "batches for the stderr");
        sub->add_option("--fd-step", ov.fd_step, "finite-difference step (0 = auto)");
    };

    CLI::App* fi = app.add_subcommand("fi", "Monte Carlo Fisher information of a map");
    add_model_flags(fi);
    fi->add_option("--s", ov.s, "bias strength (explicit mode)");
    fi->add_option("--mode", ov.mode, "bias mode: none|explicit");
    fi->add_option("--b", ov.b_values, "explicit per-collision weights, e.g. 1,-1,...");

    CLI::App* bg = app.add_subcommand("bias-global", "global bias-selection strategy");
    add_model_flags(bg);
    bg->add_option("--s", ov.s, "bias strength");

    CLI::App* bl = app.add_subcommand("bias-local", "local bias-selection strategy");
    add_model_flags(bl);
    bl->add_option("--s", ov.s, "bias strength");

    CLI::App* sweep = app.add_subcommand("sweep", "Fisher information vs bias strength");
    add_model_flags(sweep);
    sweep->add_option("--s", ov.s_values, "s values: comma list or start:step:stop");
    sweep->add_option("--strategy", ov.strategy, "global|local");

    CLI::App* en = app.add_subcommand("enumerate", "exact Fisher information by enumeration");
    add_model_flags(en);
    en->add_option("--s", ov.s, "bias strength (explicit mode)");
    en->add_option("--mode", ov.mode, "bias mode: none|explicit");
    en->add_option("--b", ov.b_values, "explicit per-collision weights");

    CLI::App* lim = app.add_subcommand("limit-check", "collision-model convergence to the LME");
    add_model_flags(lim);
    lim->add_option("--t-final", ov.t_final, "evolution time");
    lim->add_option("--dt-int", ov.dt_int, "integrator step");
    lim->add_option("--dt-list", ov.dt_list, "collision durations, comma list");

    CLI::App* sse = app.add_subcommand("sse", "stochastic Schrödinger trajectories vs LME");
    add_model_flags(sse);
    sse->add_option("--t-final", ov.t_final, "evolution time");
    sse->add_option("--dt-int", ov.dt_int, "integrator step");

    CLI::App* col = app.add_subcommand("collapse", "finite-size-scaling collapse fit");
    col->add_option("--input", ov.input, "CSV with columns L,h,A")->expected(1);
    col->add_option("--a-range", ov.a_range, "exponent a scan range lo,hi");
    col->add_option("--b-range", ov.b_range, "exponent b scan range lo,hi");
    col->add_option("--grid", ov.grid, "coarse scan resolution");

    CLI11_PARSE(app, argc, argv);
    const std::string subcommand = app.get_subcommands().front()->get_name();

    try {
        const ExperimentConfig cfg = build_config(config_path, ov, subcommand);
        const ReportBundle bundle = run_experiment(cfg, subcommand);
        std::cout << emit_report(bundle);
        return bundle.ok() ? 0 : 2;
    } catch (const Error& e) {
        nlohmann::json err{{"error", {{"type", classify(e)}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", {{"type", "internal"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
