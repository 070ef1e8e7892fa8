#include "qtbias/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qtbias/errors.hpp"
#include "qtbias/qmath.hpp"

namespace qtbias {

namespace {

// RNG domain tags; combined with the caller's base domain so repeated uses
// of one seed stay decorrelated.
constexpr std::uint64_t kTagUnbiased = 0x51;
constexpr std::uint64_t kTagBiased = 0xB1;

std::uint64_t sub_domain(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0) {
    return base * 0x100000001B3ull + tag + (index << 16);
}

struct UnbiasedStage {
    FIEstimate estimate;
    Bits m_max;
    std::vector<ConvergenceRow> rows;
    bool converged = true;
};

UnbiasedStage run_unbiased_stage(const ModelParams& p, const OptimizeOptions& opt) {
    p.validate();
    const BiasSchedule unbiased = BiasSchedule::unbiased(p.n_collisions);
    const FiSampler sampler(p, unbiased, opt.fd_step);
    const std::uint64_t domain = sub_domain(opt.domain, kTagUnbiased);

    UnbiasedStage stage;
    std::vector<double> f_values;
    std::int64_t n = std::max<std::int64_t>(opt.n_traj, opt.n_batches);
    for (;;) {
        extend_f_values(sampler, opt.seed, domain, f_values, n, opt.threads);
        stage.estimate = estimate_from_values(f_values, opt.n_batches, opt.seed);
        stage.rows.push_back(
            {"unbiased", n, stage.estimate.mean, stage.estimate.std_err});
        const bool converged = stage.estimate.mean <= 0.0 ||
                               stage.estimate.std_err <= opt.target_rel_err * stage.estimate.mean;
        if (converged) break;
        if (n >= opt.n_traj_cap) {
            stage.converged = false;
            break;
        }
        n = std::min(2 * n, opt.n_traj_cap);
    }
    stage.m_max = max_precision_outcomes(sampler, opt.seed, domain, f_values);
    return stage;
}

FIEstimate biased_estimate(const ModelParams& p, const BiasSchedule& sched,
                           const OptimizeOptions& opt, std::uint64_t domain,
                           std::vector<ConvergenceRow>& rows) {
    EstimateOptions eopt;
    eopt.n_traj = opt.n_traj;
    eopt.n_batches = opt.n_batches;
    eopt.seed = opt.seed;
    eopt.domain = domain;
    eopt.fd_step = opt.fd_step;
    eopt.threads = opt.threads;
    const FIEstimate est = estimate_fi_mc(p, sched, eopt);
    rows.push_back({"biased", est.n_traj, est.mean, est.std_err});
    return est;
}

std::vector<double> weights_from_outcomes(const Bits& m) {
    std::vector<double> b(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) b[i] = m[i] == 1 ? -1.0 : 1.0;
    return b;
}

// One-step dressed map built from a conditional state: probabilities of both
// outcomes and their log-derivatives in omega.
struct OneStepView {
    double p0 = 0.0, p1 = 0.0;       // at nominal omega
    double dlog0 = 0.0, dlog1 = 0.0;
    bool valid0 = false, valid1 = false;
};

OneStepView one_step_view(const KrausPair pairs[3], double s, double b_n,
                          const PureState& psi, double delta, int step_index) {
    double prob[3][2];
    for (int v = 0; v < 3; ++v) {
        const KrausPair& k = pairs[v];
        const double w = std::exp(-s * b_n);
        CMatrix g2 = k.k0.adjoint() * k.k0 + (k.k1.adjoint() * k.k1) * w;
        // G0^2 is Hermitian up to rounding; pin it before the spectral calls.
        for (int i = 0; i < 2; ++i)
            for (int j = i; j < 2; ++j) {
                const cplx sym = 0.5 * (g2(i, j) + std::conj(g2(j, i)));
                g2(i, j) = sym;
                g2(j, i) = std::conj(sym);
            }
        const double ev = min_herm_eigenvalue(g2);
        if (ev < 1e-12) throw DegenerateScheduleError(step_index, ev);
        const CMatrix g0 = psd_sqrt(g2);
        const CMatrix inv = psd_inverse(g0);
        const PureState dressed = apply(g0, psi).normalized();
        prob[v][0] = apply(k.k0 * inv, dressed).norm2();
        prob[v][1] = std::exp(-s * b_n) * apply(k.k1 * inv, dressed).norm2();
    }
    OneStepView view;
    view.p0 = prob[0][0];
    view.p1 = prob[0][1];
    if (prob[1][0] > 0.0 && prob[2][0] > 0.0) {
        view.dlog0 = (std::log(prob[1][0]) - std::log(prob[2][0])) / (2.0 * delta);
        view.valid0 = true;
    }
    if (prob[1][1] > 0.0 && prob[2][1] > 0.0) {
        view.dlog1 = (std::log(prob[1][1]) - std::log(prob[2][1])) / (2.0 * delta);
        view.valid1 = true;
    }
    return view;
}

double sensitivity_of(const OneStepView& v, int toward, LocalSensitivityMode mode) {
    const double p = toward == 1 ? v.p1 : v.p0;
    const bool valid = toward == 1 ? v.valid1 : v.valid0;
    const double dlog = toward == 1 ? v.dlog1 : v.dlog0;
    switch (mode) {
        case LocalSensitivityMode::single_branch:
            return (p > 0.0 && valid) ? dlog * dlog : 0.0;
        case LocalSensitivityMode::one_step_fi: {
            double fi = 0.0;
            if (v.p0 > 0.0 && v.valid0) fi += v.p0 * v.dlog0 * v.dlog0;
            if (v.p1 > 0.0 && v.valid1) fi += v.p1 * v.dlog1 * v.dlog1;
            return fi;
        }
        case LocalSensitivityMode::weighted:
            return (p > 0.0 && valid) ? p * dlog * dlog : 0.0;
    }
    return 0.0;
}

// Advance the conditional state along outcome `toward` of the one-step
// dressed map at nominal omega.
PureState advance_one_step(const KrausPair& k, double s, double b_n, const PureState& psi,
                           int toward, int step_index) {
    const double w = std::exp(-s * b_n);
    CMatrix g2 = k.k0.adjoint() * k.k0 + (k.k1.adjoint() * k.k1) * w;
    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) {
            const cplx sym = 0.5 * (g2(i, j) + std::conj(g2(j, i)));
            g2(i, j) = sym;
            g2(j, i) = std::conj(sym);
        }
    const double ev = min_herm_eigenvalue(g2);
    if (ev < 1e-12) throw DegenerateScheduleError(step_index, ev);
    const CMatrix g0 = psd_sqrt(g2);
    const CMatrix inv = psd_inverse(g0);
    const PureState dressed = apply(g0, psi).normalized();
    const CMatrix op = toward == 1 ? (k.k1 * inv) * std::exp(-0.5 * s * b_n) : k.k0 * inv;
    return apply(op, dressed).normalized();
}

}  // namespace

Bits select_max_precision_trajectory(std::span<const TrajectoryRecord> records) {
    if (records.empty())
        throw std::invalid_argument("select_max_precision_trajectory: empty input");
    const TrajectoryRecord* best = &records[0];
    for (const TrajectoryRecord& r : records) {
        if (r.f_m > best->f_m || (r.f_m == best->f_m && r.outcomes < best->outcomes))
            best = &r;
    }
    return best->outcomes;
}

OptimizationReport run_global(const ModelParams& p, double s, const OptimizeOptions& opt) {
    UnbiasedStage stage = run_unbiased_stage(p, opt);

    OptimizationReport report;
    report.strategy = Strategy::global;
    report.s = s;
    report.m_max = stage.m_max;
    report.b = weights_from_outcomes(stage.m_max);
    report.fi_unbiased = stage.estimate;
    report.diagnostics = std::move(stage.rows);
    report.step1_converged = stage.converged;

    const BiasSchedule sched{s, report.b};
    report.fi_biased =
        biased_estimate(p, sched, opt, sub_domain(opt.domain, kTagBiased), report.diagnostics);
    return report;
}

OptimizationReport run_local(const ModelParams& p, double s, const OptimizeOptions& opt) {
    p.validate();
    const double delta = opt.fd_step > 0.0 ? opt.fd_step : default_fd_step(p.omega);
    const KrausPair pairs[3] = {exact_kraus(p), exact_kraus(p.with_omega(p.omega + delta)),
                                exact_kraus(p.with_omega(p.omega - delta))};

    OptimizationReport report;
    report.strategy = Strategy::local;
    report.s = s;

    PureState psi = p.psi0.normalized();
    for (int n = 1; n <= p.n_collisions; ++n) {
        const OneStepView plus = one_step_view(pairs, s, +1.0, psi, delta, n);
        const OneStepView minus = one_step_view(pairs, s, -1.0, psi, delta, n);
        // b = +1 biases toward no-click (outcome 0), b = -1 toward a click.
        const double sens_plus = sensitivity_of(plus, 0, opt.local_mode);
        const double sens_minus = sensitivity_of(minus, 1, opt.local_mode);
        const double b_n = sens_plus >= sens_minus ? 1.0 : -1.0;
        const int toward = b_n > 0 ? 0 : 1;
        psi = advance_one_step(pairs[0], s, b_n, psi, toward, n);
        report.b.push_back(b_n);
        report.m_max.push_back(toward);
    }

    // Unbiased reference at the same estimation settings (no escalation).
    EstimateOptions eopt;
    eopt.n_traj = opt.n_traj;
    eopt.n_batches = opt.n_batches;
    eopt.seed = opt.seed;
    eopt.domain = sub_domain(opt.domain, kTagUnbiased);
    eopt.fd_step = opt.fd_step;
    eopt.threads = opt.threads;
    report.fi_unbiased = estimate_fi_mc(p, BiasSchedule::unbiased(p.n_collisions), eopt);
    report.diagnostics.push_back(
        {"unbiased", report.fi_unbiased.n_traj, report.fi_unbiased.mean,
         report.fi_unbiased.std_err});

    const BiasSchedule sched{s, report.b};
    report.fi_biased =
        biased_estimate(p, sched, opt, sub_domain(opt.domain, kTagBiased), report.diagnostics);
    return report;
}

std::vector<SweepPoint> sweep_bias_strength(const ModelParams& p, Strategy strategy,
                                            std::span<const double> s_values,
                                            const OptimizeOptions& opt) {
    std::vector<double> points(s_values.begin(), s_values.end());
    if (std::find(points.begin(), points.end(), 0.0) == points.end())
        points.insert(points.begin(), 0.0);  // baseline anchor

    // The global strategy's unbiased stage does not depend on s: run it once.
    UnbiasedStage stage;
    FIEstimate local_unbiased;
    if (strategy == Strategy::global) {
        stage = run_unbiased_stage(p, opt);
    } else {
        EstimateOptions eopt;
        eopt.n_traj = opt.n_traj;
        eopt.n_batches = opt.n_batches;
        eopt.seed = opt.seed;
        eopt.domain = sub_domain(opt.domain, kTagUnbiased);
        eopt.fd_step = opt.fd_step;
        eopt.threads = opt.threads;
        local_unbiased = estimate_fi_mc(p, BiasSchedule::unbiased(p.n_collisions), eopt);
    }

    std::vector<SweepPoint> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        SweepPoint pt;
        pt.s = points[i];
        try {
            if (strategy == Strategy::global) {
                OptimizationReport rep;
                rep.strategy = Strategy::global;
                rep.s = pt.s;
                rep.m_max = stage.m_max;
                rep.b = weights_from_outcomes(stage.m_max);
                rep.fi_unbiased = stage.estimate;
                rep.diagnostics = stage.rows;
                rep.step1_converged = stage.converged;
                const BiasSchedule sched{pt.s, rep.b};
                rep.fi_biased = biased_estimate(
                    p, sched, opt, sub_domain(opt.domain, kTagBiased, i), rep.diagnostics);
                pt.report = std::move(rep);
            } else {
                OptimizeOptions per_point = opt;
                per_point.domain = sub_domain(opt.domain, kTagBiased, i);
                OptimizationReport rep = run_local(p, pt.s, per_point);
                rep.fi_unbiased = local_unbiased;  // shared baseline
                pt.report = std::move(rep);
            }
        } catch (const Error& e) {
            pt.ok = false;
            pt.error = e.what();
        }
        out.push_back(std::move(pt));
    }
    return out;
}

}  // namespace qtbias
