#include "qtbias/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qtbias/errors.hpp"
#include "qtbias/parallel.hpp"

namespace qtbias {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kProbSlack = 1e-12;

double checked_branch_prob(double p) {
    if (p < -kProbSlack || p > 1.0 + kProbSlack) throw NumericalDegradationError(p);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace

double default_fd_step(double omega) { return 1e-4 * std::max(1.0, std::abs(omega)); }

SampledTrajectory sample_trajectory(const TiltedSchedule& ts, RngStream& rng) {
    SampledTrajectory out;
    out.outcomes.reserve(ts.steps.size());
    PureState psi = ts.psi0;
    for (const TiltedStep& st : ts.steps) {
        const PureState clicked = apply(st.k1, psi);
        const double p1 = checked_branch_prob(clicked.norm2());
        const int bit = rng.next_double() < p1 ? 1 : 0;
        const PureState next = bit == 1 ? clicked : apply(st.k0, psi);
        const double q = next.norm2();
        checked_branch_prob(q);
        if (q <= 0.0) throw NumericalDegradationError(q);
        out.logp += std::log(q);
        psi = next.normalized();
        out.outcomes.push_back(bit);
    }
    out.logp = std::min(out.logp, 0.0);
    out.final_state = psi;
    return out;
}

double trajectory_logprob(const TiltedSchedule& ts, const Bits& m) {
    if (static_cast<int>(m.size()) != ts.n())
        throw std::invalid_argument("trajectory_logprob: outcome length mismatch");
    PureState psi = ts.psi0;
    double logp = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const TiltedStep& st = ts.steps[i];
        const PureState next = apply(m[i] == 1 ? st.k1 : st.k0, psi);
        const double q = next.norm2();
        if (q <= 0.0) return -kInf;
        logp += std::log(q);
        psi = next.normalized();
    }
    return std::min(logp, 0.0);
}

namespace {

TiltedSchedule shifted_schedule(const ModelParams& p, const BiasSchedule& sched,
                                double omega) {
    return build_tilted_schedule(p.with_omega(omega), sched);
}

double central_difference(const ModelParams& p, const BiasSchedule& sched, const Bits& m,
                          double delta) {
    const double lp = trajectory_logprob(shifted_schedule(p, sched, p.omega + delta), m);
    const double lm = trajectory_logprob(shifted_schedule(p, sched, p.omega - delta), m);
    if (!std::isfinite(lp) || !std::isfinite(lm)) throw UndefinedDerivativeError();
    return (lp - lm) / (2.0 * delta);
}

}  // namespace

double dlogp_domega(const ModelParams& p, const BiasSchedule& sched, const Bits& m,
                    double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("dlogp_domega: delta must be > 0");
    return central_difference(p, sched, m, delta);
}

FdDerivative dlogp_domega_checked(const ModelParams& p, const BiasSchedule& sched,
                                  const Bits& m, double delta) {
    FdDerivative fd;
    fd.value = dlogp_domega(p, sched, m, delta);
    fd.half_step = central_difference(p, sched, m, 0.5 * delta);
    fd.consistent =
        std::abs(fd.value - fd.half_step) <= std::max(1e-6 * std::abs(fd.value), 1e-8);
    return fd;
}

TrajectoryRecord trajectory_precision(const ModelParams& p, const BiasSchedule& sched,
                                      const Bits& m, double delta) {
    TrajectoryRecord rec;
    rec.outcomes = m;
    rec.logp = trajectory_logprob(build_tilted_schedule(p, sched), m);
    rec.dlogp = dlogp_domega(p, sched, m, delta);
    rec.f_m = rec.dlogp * rec.dlogp;
    return rec;
}

FiSampler::FiSampler(const ModelParams& p, const BiasSchedule& sched, double fd_step)
    : delta_(fd_step > 0.0 ? fd_step : default_fd_step(p.omega)) {
    center_ = build_tilted_schedule(p, sched);
    plus_ = shifted_schedule(p, sched, p.omega + delta_);
    minus_ = shifted_schedule(p, sched, p.omega - delta_);
}

TrajectoryRecord FiSampler::sample_record(std::uint64_t seed, std::uint64_t domain,
                                          std::uint64_t index) const {
    RngStream rng(seed, domain, index);
    SampledTrajectory traj = sample_trajectory(center_, rng);
    TrajectoryRecord rec;
    rec.outcomes = std::move(traj.outcomes);
    rec.logp = traj.logp;
    const double lp = trajectory_logprob(plus_, rec.outcomes);
    const double lm = trajectory_logprob(minus_, rec.outcomes);
    if (!std::isfinite(lp) || !std::isfinite(lm)) throw UndefinedDerivativeError();
    rec.dlogp = (lp - lm) / (2.0 * delta_);
    rec.f_m = rec.dlogp * rec.dlogp;
    return rec;
}

FIEstimate estimate_from_values(std::span<const double> f_values, int n_batches,
                                std::uint64_t seed) {
    const std::int64_t n = static_cast<std::int64_t>(f_values.size());
    if (n_batches < 2) throw std::invalid_argument("estimate_from_values: need >= 2 batches");
    if (n < n_batches)
        throw std::invalid_argument("estimate_from_values: need n_traj >= n_batches");
    FIEstimate est;
    est.n_traj = n;
    est.n_batches = n_batches;
    est.seed = seed;
    est.mean = pairwise_sum(f_values) / static_cast<double>(n);

    std::vector<double> batch_means(static_cast<std::size_t>(n_batches));
    for (int k = 0; k < n_batches; ++k) {
        const std::size_t lo = static_cast<std::size_t>(n) * static_cast<std::size_t>(k) /
                               static_cast<std::size_t>(n_batches);
        const std::size_t hi = static_cast<std::size_t>(n) * static_cast<std::size_t>(k + 1) /
                               static_cast<std::size_t>(n_batches);
        batch_means[static_cast<std::size_t>(k)] =
            pairwise_sum(f_values.subspan(lo, hi - lo)) / static_cast<double>(hi - lo);
    }
    const double bmean = pairwise_sum(batch_means) / static_cast<double>(n_batches);
    double var = 0.0;
    for (double bm : batch_means) var += (bm - bmean) * (bm - bmean);
    var /= static_cast<double>(n_batches - 1);
    est.std_err = std::sqrt(var / static_cast<double>(n_batches));
    return est;
}

void extend_f_values(const FiSampler& sampler, std::uint64_t seed, std::uint64_t domain,
                     std::vector<double>& f_values, std::int64_t n_traj, int threads) {
    const std::size_t old_n = f_values.size();
    const std::size_t new_n = static_cast<std::size_t>(n_traj);
    if (new_n <= old_n) return;
    f_values.resize(new_n);
    parallel_for(new_n - old_n, threads, [&](std::size_t i) {
        const std::size_t idx = old_n + i;
        f_values[idx] = sampler.sample_record(seed, domain, idx).f_m;
    });
}

FiSampleRun run_fi_sampling(const ModelParams& p, const BiasSchedule& sched,
                            const EstimateOptions& opt) {
    FiSampler sampler(p, sched, opt.fd_step);
    FiSampleRun run;
    extend_f_values(sampler, opt.seed, opt.domain, run.f_values, opt.n_traj, opt.threads);
    run.estimate = estimate_from_values(run.f_values, opt.n_batches, opt.seed);
    return run;
}

FIEstimate estimate_fi_mc(const ModelParams& p, const BiasSchedule& sched,
                          const EstimateOptions& opt) {
    return run_fi_sampling(p, sched, opt).estimate;
}

Bits max_precision_outcomes(const FiSampler& sampler, std::uint64_t seed,
                            std::uint64_t domain, std::span<const double> f_values) {
    if (f_values.empty())
        throw std::invalid_argument("max_precision_outcomes: empty sampling run");
    double best = f_values[0];
    for (double f : f_values) best = std::max(best, f);
    Bits chosen;
    for (std::size_t i = 0; i < f_values.size(); ++i) {
        if (f_values[i] != best) continue;
        Bits outcomes = sampler.sample_record(seed, domain, i).outcomes;
        if (chosen.empty() || outcomes < chosen) chosen = std::move(outcomes);
    }
    return chosen;
}

namespace {

struct EnumNode {
    PureState pc, pp, pm;   // normalized conditional states at omega, omega±delta
    double lc, lp, lm;      // accumulated log-probabilities
};

struct EnumAccum {
    double fi = 0.0;
    double mass = 0.0;
    std::int64_t leaves = 0;
    std::int64_t skipped = 0;
};

class Enumerator {
public:
    Enumerator(const TiltedSchedule& c, const TiltedSchedule& p, const TiltedSchedule& m,
               double delta)
        : c_(c), p_(p), m_(m), delta_(delta) {}

    EnumNode root() const {
        return {c_.psi0, p_.psi0, m_.psi0, 0.0, 0.0, 0.0};
    }

    // Advance one collision along outcome `bit`; returns false if the branch
    // has zero probability at the nominal omega.
    bool step(const EnumNode& in, int depth, int bit, EnumNode& out) const {
        const auto& sc = c_.steps[static_cast<std::size_t>(depth)];
        const PureState nc = apply(bit == 1 ? sc.k1 : sc.k0, in.pc);
        const double qc = nc.norm2();
        if (qc <= 0.0) return false;
        out.pc = nc.normalized();
        out.lc = in.lc + std::log(qc);

        const auto& sp = p_.steps[static_cast<std::size_t>(depth)];
        const PureState np = apply(bit == 1 ? sp.k1 : sp.k0, in.pp);
        const double qp = np.norm2();
        out.lp = qp > 0.0 ? in.lp + std::log(qp) : -kInf;
        out.pp = qp > 0.0 ? np.normalized() : np;

        const auto& sm = m_.steps[static_cast<std::size_t>(depth)];
        const PureState nm = apply(bit == 1 ? sm.k1 : sm.k0, in.pm);
        const double qm = nm.norm2();
        out.lm = qm > 0.0 ? in.lm + std::log(qm) : -kInf;
        out.pm = qm > 0.0 ? nm.normalized() : nm;
        return true;
    }

    void dfs(const EnumNode& node, int depth, EnumAccum& acc) const {
        if (depth == c_.n()) {
            const double mass = std::exp(node.lc);
            acc.mass += mass;
            if (std::isfinite(node.lp) && std::isfinite(node.lm)) {
                const double d = (node.lp - node.lm) / (2.0 * delta_);
                acc.fi += mass * d * d;
                ++acc.leaves;
            } else {
                ++acc.skipped;
            }
            return;
        }
        EnumNode child;
        for (int bit = 0; bit <= 1; ++bit)
            if (step(node, depth, bit, child)) dfs(child, depth + 1, acc);
    }

private:
    const TiltedSchedule& c_;
    const TiltedSchedule& p_;
    const TiltedSchedule& m_;
    double delta_;
};

}  // namespace

EnumerationResult exact_fi_enumerate(const ModelParams& p, const BiasSchedule& sched,
                                     double delta, int cap, int threads) {
    p.validate();
    if (p.n_collisions > cap) throw EnumerationCapError(p.n_collisions, cap);
    const double d = delta > 0.0 ? delta : default_fd_step(p.omega);
    const TiltedSchedule center = build_tilted_schedule(p, sched);
    const TiltedSchedule plus = shifted_schedule(p, sched, p.omega + d);
    const TiltedSchedule minus = shifted_schedule(p, sched, p.omega - d);
    const Enumerator walker(center, plus, minus, d);

    EnumerationResult out;
    const int n = p.n_collisions;
    constexpr int kPrefixBits = 8;
    if (n <= kPrefixBits) {
        EnumAccum acc;
        walker.dfs(walker.root(), 0, acc);
        out.fi = acc.fi;
        out.prob_mass = acc.mass;
        out.n_outcomes = acc.leaves;
        out.skipped = acc.skipped;
        return out;
    }

    // Fixed 8-bit prefix decomposition: the same partials and the same
    // reduction order regardless of how many workers computed them.
    constexpr std::size_t kPrefixes = 1u << kPrefixBits;
    std::vector<EnumAccum> partial(kPrefixes);
    parallel_for(kPrefixes, threads, [&](std::size_t prefix) {
        EnumNode node = walker.root();
        EnumNode next;
        for (int depth = 0; depth < kPrefixBits; ++depth) {
            const int bit = static_cast<int>((prefix >> depth) & 1u);
            if (!walker.step(node, depth, bit, next)) return;  // zero-probability prefix
            node = next;
        }
        walker.dfs(node, kPrefixBits, partial[prefix]);
    });
    std::vector<double> fis(kPrefixes), masses(kPrefixes);
    for (std::size_t i = 0; i < kPrefixes; ++i) {
        fis[i] = partial[i].fi;
        masses[i] = partial[i].mass;
        out.n_outcomes += partial[i].leaves;
        out.skipped += partial[i].skipped;
    }
    out.fi = pairwise_sum(fis);
    out.prob_mass = pairwise_sum(masses);
    return out;
}

namespace {

Histogram build_histogram(std::span<const double> values, const BinSpec& bins) {
    if (values.empty()) throw std::invalid_argument("fm_histogram: empty input");
    if (bins.count < 1) throw std::invalid_argument("fm_histogram: need >= 1 bin");
    double lo = bins.lo, hi = bins.hi;
    if (bins.auto_range) {
        lo = values[0];
        hi = values[0];
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const bool log_scale = bins.log10_scale;
    if (log_scale) {
        const double floor_pos = 1e-300;
        lo = std::log10(std::max(lo, floor_pos));
        hi = std::log10(std::max(hi, floor_pos));
    }
    if (!(hi > lo)) hi = lo + 1.0;
    const int nb = bins.count;
    const double width = (hi - lo) / nb;

    Histogram h;
    h.bin_lo.resize(static_cast<std::size_t>(nb));
    h.bin_hi.resize(static_cast<std::size_t>(nb));
    h.prob.assign(static_cast<std::size_t>(nb), 0.0);
    for (int i = 0; i < nb; ++i) {
        const double a = lo + i * width;
        const double b = lo + (i + 1) * width;
        h.bin_lo[static_cast<std::size_t>(i)] = log_scale ? std::pow(10.0, a) : a;
        h.bin_hi[static_cast<std::size_t>(i)] = log_scale ? std::pow(10.0, b) : b;
    }
    const double unit = 1.0 / static_cast<double>(values.size());
    for (double v : values) {
        double x = v;
        if (log_scale) x = std::log10(std::max(v, 1e-300));
        int idx = static_cast<int>(std::floor((x - lo) / width));
        idx = std::clamp(idx, 0, nb - 1);
        h.prob[static_cast<std::size_t>(idx)] += unit;
    }
    h.fi_mean = pairwise_sum(values) / static_cast<double>(values.size());
    return h;
}

}  // namespace

Histogram fm_histogram(std::span<const TrajectoryRecord> records, const BinSpec& bins) {
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& r : records) values.push_back(r.f_m);
    return build_histogram(values, bins);
}

Histogram fm_histogram_values(std::span<const double> f_values, const BinSpec& bins) {
    return build_histogram(f_values, bins);
}

}  // namespace qtbias
