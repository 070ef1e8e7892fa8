// experiment.hpp — named experiment pipelines: run, write artifacts, check
// invariants, and summarize.

#pragma once

#include <string>
#include <vector>

#include "qtbias/config.hpp"

namespace qtbias {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct ReportBundle {
    std::string dir;
    std::string subcommand;
    ExperimentConfig config;
    std::vector<CheckResult> checks;
    std::vector<std::string> artifacts;  // file names relative to dir
    std::vector<std::string> notes;

    bool ok() const;
};

// Known subcommands: fi, bias-global, bias-local, sweep, enumerate,
// limit-check, sse, collapse.  Writes artifacts under cfg.out_dir; every
// file carries the config fingerprint and seed.  Module failures propagate
// as qtbias::Error subclasses; check failures are collected in the bundle.
ReportBundle run_experiment(const ExperimentConfig& cfg, const std::string& subcommand);

// Deterministic plain-text summary (also written as summary.txt).
std::string emit_report(const ReportBundle& bundle);

}  // namespace qtbias
