// trajectory.hpp — Born-rule sampling of measurement records, per-trajectory
// log-likelihood derivatives and precisions, and Fisher-information
// estimation by Monte Carlo and by exhaustive enumeration.

#pragma once

#include <cstdint>
#include <span>

#include "qtbias/bias.hpp"
#include "qtbias/rng.hpp"

namespace qtbias {

struct TrajectoryRecord {
    Bits outcomes;        // collision order
    double logp = 0.0;    // log probability at nominal omega, <= 0
    double dlogp = 0.0;   // d/domega of logp (central finite difference)
    double f_m = 0.0;     // per-trajectory precision, dlogp^2
};

struct FIEstimate {
    double mean = 0.0;
    double std_err = 0.0;     // from the variance of batch means
    std::int64_t n_traj = 0;
    int n_batches = 0;
    std::uint64_t seed = 0;
};

struct SampledTrajectory {
    Bits outcomes;
    PureState final_state;  // normalized conditional state after the last collision
    double logp = 0.0;
};

// Central-difference step policy: 1e-4 * max(1, |omega|).
double default_fd_step(double omega);

// One Born-rule pass through the schedule; draws one uniform per collision.
SampledTrajectory sample_trajectory(const TiltedSchedule& ts, RngStream& rng);

// Stepwise log-space accumulation; returns -inf for an impossible record.
double trajectory_logprob(const TiltedSchedule& ts, const Bits& m);

// Central finite difference of the trajectory log-probability in omega.
// The full schedule (Kraus pairs and normalizers) is rebuilt at omega±delta
// while the bias data (s, b) is held fixed.  Throws UndefinedDerivativeError
// if a shifted log-probability is -inf.
double dlogp_domega(const ModelParams& p, const BiasSchedule& sched, const Bits& m,
                    double delta);

struct FdDerivative {
    double value = 0.0;      // central difference at delta
    double half_step = 0.0;  // central difference at delta/2
    bool consistent = true;  // |value - half_step| <= max(1e-6 |value|, 1e-8)
};
FdDerivative dlogp_domega_checked(const ModelParams& p, const BiasSchedule& sched,
                                  const Bits& m, double delta);

TrajectoryRecord trajectory_precision(const ModelParams& p, const BiasSchedule& sched,
                                      const Bits& m, double delta);

// Owns the schedules at omega and omega±delta so per-trajectory records can
// be produced (and deterministically replayed) without rebuilding them.
class FiSampler {
public:
    FiSampler(const ModelParams& p, const BiasSchedule& sched, double fd_step = 0.0);

    // Record of the trajectory with counter-based index `index` under
    // (seed, domain).  Identical inputs give identical records on any thread.
    TrajectoryRecord sample_record(std::uint64_t seed, std::uint64_t domain,
                                   std::uint64_t index) const;

    const TiltedSchedule& schedule() const { return center_; }
    double fd_step() const { return delta_; }

private:
    TiltedSchedule center_, plus_, minus_;
    double delta_;
};

struct EstimateOptions {
    std::int64_t n_traj = 10000;
    int n_batches = 10;
    std::uint64_t seed = 12345;
    std::uint64_t domain = 0;  // separates unrelated uses of the same seed
    double fd_step = 0.0;      // 0 -> default_fd_step(omega)
    int threads = 0;
};

// Mean/stderr over batch means of an index-ordered value vector.
FIEstimate estimate_from_values(std::span<const double> f_values, int n_batches,
                                std::uint64_t seed);

// Fill f_values[old_size..n_traj) by sampling the missing trajectory indices.
void extend_f_values(const FiSampler& sampler, std::uint64_t seed, std::uint64_t domain,
                     std::vector<double>& f_values, std::int64_t n_traj, int threads);

struct FiSampleRun {
    FIEstimate estimate;
    std::vector<double> f_values;  // per-trajectory precision, indexed
};

FiSampleRun run_fi_sampling(const ModelParams& p, const BiasSchedule& sched,
                            const EstimateOptions& opt);

// Monte Carlo Fisher information of the schedule's own trajectory ensemble.
FIEstimate estimate_fi_mc(const ModelParams& p, const BiasSchedule& sched,
                          const EstimateOptions& opt);

// Outcomes of the highest-precision trajectory in a finished sampling run;
// ties resolved toward the lexicographically smallest bitstring by replay.
Bits max_precision_outcomes(const FiSampler& sampler, std::uint64_t seed,
                            std::uint64_t domain, std::span<const double> f_values);

struct EnumerationResult {
    double fi = 0.0;
    double prob_mass = 0.0;       // should be 1 within 1e-9
    std::int64_t n_outcomes = 0;  // leaves with positive probability
    std::int64_t skipped = 0;     // leaves whose shifted logp was -inf
};

// Sum over all 2^N records of p * (dlogp)^2; N capped (default 24).
// Parallelizes over fixed 8-bit outcome prefixes; the reduction order is
// independent of the thread count.
EnumerationResult exact_fi_enumerate(const ModelParams& p, const BiasSchedule& sched,
                                     double delta, int cap = 24, int threads = 0);

struct BinSpec {
    int count = 50;
    double lo = 0.0;
    double hi = 0.0;
    bool log10_scale = false;
    bool auto_range = true;  // take [min, max] of the data
};

struct Histogram {
    std::vector<double> bin_lo;
    std::vector<double> bin_hi;
    std::vector<double> prob;  // sums to 1
    double fi_mean = 0.0;      // ensemble-mean annotation
};

Histogram fm_histogram(std::span<const TrajectoryRecord> records, const BinSpec& bins);
Histogram fm_histogram_values(std::span<const double> f_values, const BinSpec& bins);

}  // namespace qtbias
