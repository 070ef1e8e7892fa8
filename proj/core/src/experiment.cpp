#include "qtbias/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qtbias/collapse.hpp"
#include "qtbias/dynamics.hpp"
#include "qtbias/errors.hpp"
#include "qtbias/parallel.hpp"
#include "qtbias/qmath.hpp"

namespace qtbias {

using json = nlohmann::json;

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string bitstring(const Bits& m) {
    std::string s;
    s.reserve(m.size());
    for (int b : m) s.push_back(b ? '1' : '0');
    return s;
}

struct Runner {
    const ExperimentConfig& cfg;
    ReportBundle bundle;
    std::string fingerprint;

    explicit Runner(const ExperimentConfig& c, const std::string& subcommand) : cfg(c) {
        bundle.dir = cfg.out_dir;
        bundle.subcommand = subcommand;
        bundle.config = cfg;
        fingerprint = hex64(config_fingerprint(cfg));
        std::filesystem::create_directories(cfg.out_dir);
        const PureState ground = PureState::ground();
        if (std::abs(cfg.model.psi0.amp[0] - ground.amp[0]) > 1e-12 ||
            std::abs(cfg.model.psi0.amp[1] - ground.amp[1]) > 1e-12)
            bundle.notes.push_back(
                "initial state differs from the default ground state; results depend on it");
    }

    bool wants(const std::string& format) const {
        return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
    }

    std::string header() const {
        return "# qtbias " + bundle.subcommand + "\n# config=" + fingerprint +
               " seed=" + std::to_string(cfg.seed) + "\n";
    }

    void write_file(const std::string& name, const std::string& content) {
        std::ofstream out(std::filesystem::path(cfg.out_dir) / name, std::ios::binary);
        if (!out) throw Error("cannot write " + name + " under " + cfg.out_dir);
        out << content;
        bundle.artifacts.push_back(name);
    }

    void write_json(const std::string& name, json doc) {
        doc["config"] = fingerprint;
        doc["seed"] = cfg.seed;
        write_file(name, doc.dump(2) + "\n");
    }

    void check(const std::string& name, bool pass, double value, double tol,
               const std::string& detail = "") {
        bundle.checks.push_back({name, pass, value, tol, detail});
    }

    void check_leq(const std::string& name, double value, double tol,
                   const std::string& detail = "") {
        check(name, value <= tol, value, tol, detail);
    }

    BiasSchedule schedule_from_config() const {
        if (cfg.bias_mode == BiasMode::none)
            return BiasSchedule::unbiased(cfg.model.n_collisions);
        if (cfg.bias_mode == BiasMode::explicit_b) return BiasSchedule{cfg.bias_s, cfg.bias_b};
        throw Error(bundle.subcommand +
                    ": bias.mode must be none or explicit (strategies have their own "
                    "subcommands)");
    }

    OptimizeOptions optimize_options() const {
        OptimizeOptions opt;
        opt.n_traj = cfg.n_traj;
        opt.n_batches = cfg.n_batches;
        opt.seed = cfg.seed;
        opt.fd_step = cfg.fd_step;
        opt.target_rel_err = cfg.target_rel_err;
        opt.n_traj_cap = cfg.n_traj_cap;
        opt.threads = cfg.threads;
        opt.local_mode = cfg.local_mode;
        return opt;
    }

    void completeness_checks(const TiltedSchedule& ts) {
        double worst = 0.0;
        const CMatrix id = CMatrix::identity(2);
        for (const TiltedStep& st : ts.steps) {
            const CMatrix sum = st.k0.adjoint() * st.k0 + st.k1.adjoint() * st.k1;
            worst = std::max(worst, max_abs_diff(sum, id));
        }
        check_leq("tilted_completeness_defect", worst, 1e-10);
        check_leq("kraus_completeness_defect", completeness_defect(exact_kraus(cfg.model)),
                  1e-12);
    }

    void write_trajectory_dump(const FiSampler& sampler, std::uint64_t domain,
                               std::int64_t count) {
        if (!wants("csv")) return;
        std::ostringstream out;
        out << header() << "bitstring,logp,dlogp,f_m\n";
        for (std::int64_t i = 0; i < count; ++i) {
            const TrajectoryRecord rec =
                sampler.sample_record(cfg.seed, domain, static_cast<std::uint64_t>(i));
            out << bitstring(rec.outcomes) << ',' << fmt(rec.logp) << ',' << fmt(rec.dlogp)
                << ',' << fmt(rec.f_m) << '\n';
        }
        write_file("trajectories.csv", out.str());
    }

    void write_histogram(const std::string& name, std::span<const double> f_values) {
        if (!wants("csv")) return;
        BinSpec bins;
        bins.count = cfg.histogram_bins;
        bins.log10_scale = cfg.histogram_log10;
        const Histogram h = fm_histogram_values(f_values, bins);
        std::ostringstream out;
        out << header() << "# fi_mean=" << fmt(h.fi_mean) << "\nbin_lo,bin_hi,prob\n";
        for (std::size_t i = 0; i < h.prob.size(); ++i)
            out << fmt(h.bin_lo[i]) << ',' << fmt(h.bin_hi[i]) << ',' << fmt(h.prob[i])
                << '\n';
        write_file(name, out.str());
    }

    json estimate_json(const FIEstimate& est) const {
        return json{{"mean", est.mean},
                    {"std_err", est.std_err},
                    {"n_traj", est.n_traj},
                    {"n_batches", est.n_batches}};
    }

    json report_json(const OptimizationReport& rep) const {
        json j;
        j["strategy"] = rep.strategy == Strategy::global ? "global" : "local";
        j["s"] = rep.s;
        j["b"] = rep.b;
        j["m_max"] = bitstring(rep.m_max);
        j["fi_biased"] = estimate_json(rep.fi_biased);
        j["fi_unbiased"] = estimate_json(rep.fi_unbiased);
        j["step1_converged"] = rep.step1_converged;
        j["diagnostics"] = json::array();
        for (const ConvergenceRow& r : rep.diagnostics)
            j["diagnostics"].push_back(json{{"stage", r.stage},
                                            {"n_traj", r.n_traj},
                                            {"fi_mean", r.fi},
                                            {"fi_stderr", r.std_err}});
        return j;
    }

    void write_convergence(const std::vector<ConvergenceRow>& rows) {
        if (!wants("csv")) return;
        std::ostringstream out;
        out << header() << "stage,n_traj,fi_mean,fi_stderr\n";
        for (const ConvergenceRow& r : rows)
            out << r.stage << ',' << r.n_traj << ',' << fmt(r.fi) << ',' << fmt(r.std_err)
                << '\n';
        write_file("convergence.csv", out.str());
    }

    // ---- subcommands -------------------------------------------------------

    void run_fi() {
        const BiasSchedule sched = schedule_from_config();
        const FiSampler sampler(cfg.model, sched, cfg.fd_step);
        completeness_checks(sampler.schedule());

        constexpr std::uint64_t kDomain = 0xF1;
        std::vector<double> f_values;
        extend_f_values(sampler, cfg.seed, kDomain, f_values, cfg.n_traj, cfg.threads);
        const FIEstimate est = estimate_from_values(f_values, cfg.n_batches, cfg.seed);

        if (wants("json"))
            write_json("fi.json", json{{"subcommand", "fi"},
                                       {"fi", estimate_json(est)},
                                       {"fd_step", sampler.fd_step()},
                                       {"s", sched.s}});
        write_trajectory_dump(sampler, kDomain,
                              std::min<std::int64_t>(cfg.n_traj, cfg.trajectory_dump));
        write_histogram("histogram.csv", f_values);

        if (cfg.model.n_collisions <= std::min(cfg.enumeration_cap, 16)) {
            const EnumerationResult ex =
                exact_fi_enumerate(cfg.model, sched, sampler.fd_step(), cfg.enumeration_cap,
                                   cfg.threads);
            check_leq("enumeration_prob_mass_defect", std::abs(ex.prob_mass - 1.0), 1e-9);
            const double tol = std::max(3.0 * est.std_err, 1e-9);
            check("mc_vs_enumeration", std::abs(est.mean - ex.fi) <= tol,
                  std::abs(est.mean - ex.fi), tol,
                  "mc=" + fmt(est.mean) + " exact=" + fmt(ex.fi));
        }
    }

    void run_enumerate() {
        const BiasSchedule sched = schedule_from_config();
        const double delta = cfg.fd_step > 0.0 ? cfg.fd_step : default_fd_step(cfg.model.omega);
        const EnumerationResult ex =
            exact_fi_enumerate(cfg.model, sched, delta, cfg.enumeration_cap, cfg.threads);
        check_leq("enumeration_prob_mass_defect", std::abs(ex.prob_mass - 1.0), 1e-9);
        if (wants("json"))
            write_json("enumeration.json", json{{"subcommand", "enumerate"},
                                                {"fi", ex.fi},
                                                {"prob_mass", ex.prob_mass},
                                                {"n_outcomes", ex.n_outcomes},
                                                {"skipped", ex.skipped},
                                                {"fd_step", delta}});
    }

    void run_strategy(Strategy strategy) {
        const OptimizeOptions opt = optimize_options();
        const OptimizationReport rep = strategy == Strategy::global
                                           ? run_global(cfg.model, cfg.bias_s, opt)
                                           : run_local(cfg.model, cfg.bias_s, opt);
        const BiasSchedule sched{rep.s, rep.b};
        completeness_checks(build_tilted_schedule(cfg.model, sched));
        if (!rep.step1_converged)
            bundle.notes.push_back("unbiased stage hit the n_traj cap before reaching the "
                                   "relative-error target");

        if (wants("json")) write_json("report.json", report_json(rep));
        write_convergence(rep.diagnostics);

        EstimateOptions eopt;
        eopt.n_traj = cfg.n_traj;
        eopt.n_batches = cfg.n_batches;
        eopt.seed = cfg.seed;
        eopt.fd_step = cfg.fd_step;
        eopt.threads = cfg.threads;
        eopt.domain = 0x41;
        const FiSampleRun unbiased =
            run_fi_sampling(cfg.model, BiasSchedule::unbiased(cfg.model.n_collisions), eopt);
        eopt.domain = 0x42;
        const FiSampleRun biased = run_fi_sampling(cfg.model, sched, eopt);
        write_histogram("histogram_unbiased.csv", unbiased.f_values);
        write_histogram("histogram_biased.csv", biased.f_values);
    }

    void run_sweep() {
        Strategy strategy = Strategy::global;
        if (cfg.bias_mode == BiasMode::local) strategy = Strategy::local;
        std::vector<double> s_values = cfg.sweep_s;
        if (s_values.empty())
            for (int i = 0; i <= 10; ++i) s_values.push_back(0.5 * i);

        const std::vector<SweepPoint> points =
            sweep_bias_strength(cfg.model, strategy, s_values, optimize_options());

        std::ostringstream out;
        out << header() << "s,fi_mean,fi_stderr,fi_unbiased_mean,fi_unbiased_stderr,n_traj\n";
        double best_fi = -1.0, best_s = 0.0;
        std::size_t failures = 0;
        for (const SweepPoint& pt : points) {
            if (!pt.ok) {
                ++failures;
                out << fmt(pt.s) << ",nan,nan,nan,nan,0\n";
                bundle.notes.push_back("sweep point s=" + fmt(pt.s) + " failed: " + pt.error);
                continue;
            }
            const OptimizationReport& r = pt.report;
            out << fmt(pt.s) << ',' << fmt(r.fi_biased.mean) << ',' << fmt(r.fi_biased.std_err)
                << ',' << fmt(r.fi_unbiased.mean) << ',' << fmt(r.fi_unbiased.std_err) << ','
                << r.fi_biased.n_traj << '\n';
            if (r.fi_biased.mean > best_fi) {
                best_fi = r.fi_biased.mean;
                best_s = pt.s;
            }
        }
        if (wants("csv")) write_file("sweep.csv", out.str());
        if (wants("json")) {
            json j{{"subcommand", "sweep"},
                   {"strategy", strategy == Strategy::global ? "global" : "local"},
                   {"best_s", best_s},
                   {"best_fi", best_fi},
                   {"points", json::array()},
                   {"failed_points", failures}};
            for (const SweepPoint& pt : points) {
                if (!pt.ok) {
                    j["points"].push_back(json{{"s", pt.s}, {"error", pt.error}});
                } else {
                    j["points"].push_back(json{{"s", pt.s},
                                               {"fi", estimate_json(pt.report.fi_biased)},
                                               {"fi_unbiased",
                                                estimate_json(pt.report.fi_unbiased)}});
                }
            }
            write_json("sweep.json", std::move(j));
        }
        check("sweep_all_points_ok", failures == 0, static_cast<double>(failures), 0.0);
        bundle.notes.push_back("max FI " + fmt(best_fi) + " at s=" + fmt(best_s));
    }

    void run_limit_check() {
        const auto points = collision_limit_error(cfg.model, cfg.t_final, cfg.limit_dt);
        std::ostringstream out;
        out << header() << "dt,error,ratio\n";
        bool ratios_ok = true;
        double worst = 0.5;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double ratio = std::numeric_limits<double>::quiet_NaN();
            if (i > 0 && points[i - 1].error > 0.0) {
                ratio = points[i].error / points[i - 1].error;
                const bool halving =
                    std::abs(points[i].dt - 0.5 * points[i - 1].dt) <= 1e-12 * points[i - 1].dt;
                if (halving) {
                    if (ratio < 0.4 || ratio > 0.6) ratios_ok = false;
                    if (std::abs(ratio - 0.5) > std::abs(worst - 0.5)) worst = ratio;
                }
            }
            out << fmt(points[i].dt) << ',' << fmt(points[i].error) << ',' << fmt(ratio)
                << '\n';
        }
        if (wants("csv")) write_file("limit.csv", out.str());
        check("limit_halving_ratio_in_[0.4,0.6]", ratios_ok, worst, 0.6);
    }

    void run_sse() {
        const double omega = cfg.model.omega;
        const double gamma = cfg.model.gamma;
        const PureState psi0 = cfg.model.psi0.normalized();
        constexpr std::uint64_t kDomain = 0x5E;

        // Snapshot grid comes from the first trajectory; all share it.
        RngStream rng0(cfg.seed, kDomain, 0);
        const EvolutionTrace first = sample_sse(omega, gamma, psi0, cfg.t_final, cfg.dt_int,
                                                rng0, cfg.snapshot_stride);
        if (wants("csv")) {
            std::ostringstream out;
            out << header() << "t,pop_e,coh_re,coh_im,clicks\n";
            for (std::size_t i = 0; i < first.times.size(); ++i) {
                const PureState& psi = first.pure_states[i];
                const cplx coh = psi.amp[0] * std::conj(psi.amp[1]);
                out << fmt(first.times[i]) << ',' << fmt(std::norm(psi.amp[0])) << ','
                    << fmt(coh.real()) << ',' << fmt(coh.imag()) << ','
                    << first.channel_counts[i] << '\n';
            }
            write_file("trace.csv", out.str());
        }

        const std::size_t n_snap = first.times.size();
        const std::size_t n_traj = static_cast<std::size_t>(cfg.n_traj);
        // Fixed-size trajectory chunks keep the reduction order independent
        // of the thread count.
        constexpr std::size_t kChunk = 256;
        const std::size_t n_chunks = (n_traj + kChunk - 1) / kChunk;
        struct Partial {
            std::vector<double> pop, pop2, coh_re, coh_im, clicks;
        };
        std::vector<Partial> partials(n_chunks);
        parallel_for(n_chunks, cfg.threads, [&](std::size_t chunk) {
            Partial& acc = partials[chunk];
            acc.pop.assign(n_snap, 0.0);
            acc.pop2.assign(n_snap, 0.0);
            acc.coh_re.assign(n_snap, 0.0);
            acc.coh_im.assign(n_snap, 0.0);
            acc.clicks.assign(n_snap, 0.0);
            const std::size_t lo = chunk * kChunk;
            const std::size_t hi = std::min(lo + kChunk, n_traj);
            for (std::size_t i = lo; i < hi; ++i) {
                RngStream rng(cfg.seed, kDomain, i);
                const EvolutionTrace tr = sample_sse(omega, gamma, psi0, cfg.t_final,
                                                     cfg.dt_int, rng, cfg.snapshot_stride);
                for (std::size_t k = 0; k < n_snap; ++k) {
                    const PureState& psi = tr.pure_states[k];
                    const double pe = std::norm(psi.amp[0]);
                    const cplx coh = psi.amp[0] * std::conj(psi.amp[1]);
                    acc.pop[k] += pe;
                    acc.pop2[k] += pe * pe;
                    acc.coh_re[k] += coh.real();
                    acc.coh_im[k] += coh.imag();
                    acc.clicks[k] += static_cast<double>(tr.channel_counts[k]);
                }
            }
        });

        const EvolutionTrace lme = integrate_lme(omega, gamma, outer(psi0), cfg.t_final,
                                                 cfg.dt_int, cfg.snapshot_stride);
        // Agreement is z-tested at ten evenly spaced checkpoints; before the
        // first clicks the ensemble is deterministic and the stderr reflects
        // rounding, so a drift-bias allowance of 2*dt accompanies the 4-sigma
        // band.
        std::vector<std::size_t> checkpoints;
        for (std::size_t k = 1; k <= 10; ++k)
            checkpoints.push_back(std::min(n_snap - 1, k * (n_snap - 1) / 10));
        double worst_excess = std::numeric_limits<double>::lowest();
        std::ostringstream ens, ref;
        ens << header() << "t,pop_e,coh_re,coh_im,clicks\n";
        ref << header() << "t,pop_e,coh_re,coh_im\n";
        std::vector<double> tmp(n_chunks);
        for (std::size_t k = 0; k < n_snap; ++k) {
            for (std::size_t c = 0; c < n_chunks; ++c) tmp[c] = partials[c].pop[k];
            const double sum_pop = pairwise_sum(tmp);
            for (std::size_t c = 0; c < n_chunks; ++c) tmp[c] = partials[c].pop2[k];
            const double sum_pop2 = pairwise_sum(tmp);
            for (std::size_t c = 0; c < n_chunks; ++c) tmp[c] = partials[c].coh_re[k];
            const double sum_re = pairwise_sum(tmp);
            for (std::size_t c = 0; c < n_chunks; ++c) tmp[c] = partials[c].coh_im[k];
            const double sum_im = pairwise_sum(tmp);
            for (std::size_t c = 0; c < n_chunks; ++c) tmp[c] = partials[c].clicks[k];
            const double sum_clicks = pairwise_sum(tmp);

            const double n = static_cast<double>(n_traj);
            const double mean = sum_pop / n;
            const double var = std::max(0.0, sum_pop2 / n - mean * mean);
            const double se = std::sqrt(var / n);
            const double ref_pop = lme.states[k](0, 0).real();
            if (std::find(checkpoints.begin(), checkpoints.end(), k) != checkpoints.end()) {
                const double band = 4.0 * se + 2.0 * cfg.dt_int;
                worst_excess = std::max(worst_excess, std::abs(mean - ref_pop) - band);
            }
            ens << fmt(lme.times[k]) << ',' << fmt(mean) << ',' << fmt(sum_re / n) << ','
                << fmt(sum_im / n) << ',' << fmt(sum_clicks / n) << '\n';
            const cplx coh = lme.states[k](0, 1);
            ref << fmt(lme.times[k]) << ',' << fmt(ref_pop) << ',' << fmt(coh.real()) << ','
                << fmt(coh.imag()) << '\n';
        }
        if (wants("csv")) {
            write_file("ensemble.csv", ens.str());
            write_file("lme.csv", ref.str());
        }
        check_leq("sse_vs_lme_band_excess", worst_excess, 0.0);
    }

    void run_collapse() {
        if (cfg.collapse_input.empty())
            throw ConfigError("collapse.input", "collapse subcommand needs an input CSV");
        std::ifstream in(cfg.collapse_input, std::ios::binary);
        if (!in) throw Error("cannot read " + cfg.collapse_input);
        std::stringstream buf;
        buf << in.rdbuf();
        const CollapseDataset ds = parse_collapse_csv(buf.str());
        FitOptions fopt;
        fopt.a_min = cfg.a_min;
        fopt.a_max = cfg.a_max;
        fopt.b_min = cfg.b_min;
        fopt.b_max = cfg.b_max;
        fopt.grid = cfg.collapse_grid;
        const CollapseResult res = fit_exponents(ds, fopt);
        check("collapse_measure_finite", std::isfinite(res.m_value) && res.m_value >= 0.0,
              res.m_value, 0.0);
        if (wants("json"))
            write_json("collapse.json", json{{"subcommand", "collapse"},
                                             {"a", res.a},
                                             {"b", res.b},
                                             {"m_value", res.m_value},
                                             {"excluded_points", res.excluded},
                                             {"evaluations", res.evaluations}});
    }

    void finish() {
        write_file("config.json", emit_config(cfg));
        json checks = json::array();
        for (const CheckResult& c : bundle.checks)
            checks.push_back(json{{"name", c.name},
                                  {"pass", c.pass},
                                  {"value", c.value},
                                  {"tolerance", c.tolerance},
                                  {"detail", c.detail}});
        write_json("checks.json", json{{"subcommand", bundle.subcommand}, {"checks", checks}});
        write_file("summary.txt", emit_report(bundle));
    }
};

}  // namespace

bool ReportBundle::ok() const {
    for (const CheckResult& c : checks)
        if (!c.pass) return false;
    return true;
}

ReportBundle run_experiment(const ExperimentConfig& cfg, const std::string& subcommand) {
    Runner runner(cfg, subcommand);
    if (subcommand == "fi") {
        runner.run_fi();
    } else if (subcommand == "bias-global") {
        runner.run_strategy(Strategy::global);
    } else if (subcommand == "bias-local") {
        runner.run_strategy(Strategy::local);
    } else if (subcommand == "sweep") {
        runner.run_sweep();
    } else if (subcommand == "enumerate") {
        runner.run_enumerate();
    } else if (subcommand == "limit-check") {
        runner.run_limit_check();
    } else if (subcommand == "sse") {
        runner.run_sse();
    } else if (subcommand == "collapse") {
        runner.run_collapse();
    } else {
        throw Error("unknown subcommand: " + subcommand);
    }
    runner.finish();
    return runner.bundle;
}

std::string emit_report(const ReportBundle& bundle) {
    std::ostringstream out;
    out << "qtbias " << bundle.subcommand << " summary\n";
    out << "config: " << hex64(config_fingerprint(bundle.config))
        << "  seed: " << bundle.config.seed << "\n";
    out << "artifacts:";
    for (const std::string& a : bundle.artifacts) out << ' ' << a;
    out << "\nchecks:\n";
    std::size_t passed = 0;
    for (const CheckResult& c : bundle.checks) {
        out << "  " << (c.pass ? "PASS" : "FAIL") << ' ' << c.name << " value=" << fmt(c.value)
            << " tol=" << fmt(c.tolerance);
        if (!c.detail.empty()) out << ' ' << c.detail;
        out << '\n';
        if (c.pass) ++passed;
    }
    for (const std::string& n : bundle.notes) out << "note: " << n << '\n';
    out << "result: " << (bundle.ok() ? "PASS" : "FAIL") << " (" << passed << '/'
        << bundle.checks.size() << " checks)\n";
    return out.str();
}

}  // namespace qtbias
