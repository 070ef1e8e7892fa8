#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "qtbias/errors.hpp"
#include "qtbias/qmath.hpp"
#include "qtbias/trajectory.hpp"

using namespace qtbias;

namespace {

ModelParams params(double omega, double gamma, double dt, int n) {
    ModelParams p;
    p.omega = omega;
    p.gamma = gamma;
    p.dt = dt;
    p.n_collisions = n;
    return p;
}

Bits bits_of(unsigned value, int n) {
    Bits m(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = (value >> i) & 1u;
    return m;
}

unsigned index_of(const Bits& m) {
    unsigned v = 0;
    for (std::size_t i = 0; i < m.size(); ++i) v |= static_cast<unsigned>(m[i]) << i;
    return v;
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("sample_trajectory: no jump channel means all-zero records") {
    const ModelParams p = params(3.0, 0.0, 1.0, 12);
    const TiltedSchedule ts = untilted_schedule(p);
    RngStream rng(5, 0, 0);
    const SampledTrajectory t = sample_trajectory(ts, rng);
    for (int bit : t.outcomes) CHECK(bit == 0);
    CHECK(t.logp <= 0.0);
    CHECK(t.logp >= -1e-12);  // unit probability up to rounding
}

TEST_CASE("sample_trajectory: strong click suppression pins the record") {
    // s >> 1 with uniform b = +1: the only probable trajectory is all-zeros.
    const ModelParams p = params(10.0, 1.0, 1.0, 10);
    const TiltedSchedule ts = build_tilted_schedule(p, {30.0, std::vector<double>(10, 1.0)});
    for (std::uint64_t stream = 0; stream < 50; ++stream) {
        RngStream rng(17, 0, stream);
        const SampledTrajectory t = sample_trajectory(ts, rng);
        for (int bit : t.outcomes) CHECK(bit == 0);
    }
}

TEST_CASE("sample_trajectory: empirical frequencies match enumerated probabilities") {
    const int n = 4;
    const int n_samples = 100000;
    const ModelParams p = params(10.0, 1.0, 1.0, n);
    for (double s : {0.0, 1.0}) {
        BiasSchedule sched{s, std::vector<double>(n, 1.0)};
        sched.b[1] = -1.0;  // mixed pattern
        const TiltedSchedule ts = build_tilted_schedule(p, sched);
        std::vector<int> counts(1u << n, 0);
        for (int i = 0; i < n_samples; ++i) {
            RngStream rng(2024, 1, static_cast<std::uint64_t>(i));
            ++counts[index_of(sample_trajectory(ts, rng).outcomes)];
        }
        for (unsigned v = 0; v < (1u << n); ++v) {
            const double prob = tilted_trajectory_probability(ts, bits_of(v, n));
            const double freq = static_cast<double>(counts[v]) / n_samples;
            const double sigma = std::sqrt(std::max(prob * (1.0 - prob), 1e-12) / n_samples);
            CHECK(std::abs(freq - prob) <= 4.0 * sigma);
        }
    }
}

TEST_CASE("trajectory_logprob: certainties, impossibilities, stepwise = whole-string") {
    const ModelParams p1 = params(2.0, 0.0, 1.0, 1);
    const TiltedSchedule one = untilted_schedule(p1);
    CHECK(trajectory_logprob(one, Bits{0}) == 0.0);
    CHECK(trajectory_logprob(one, Bits{1}) == -std::numeric_limits<double>::infinity());

    const int n = 8;
    const ModelParams p = params(10.0, 1.0, 1.0, n);
    const std::vector<KrausPair> pairs(n, exact_kraus(p));
    const TiltedSchedule ts = untilted_schedule(pairs, p.psi0);
    RngStream rng(3, 0, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const Bits m = bits_of(static_cast<unsigned>(rng.next_u64() & 0xFFu), n);
        const double raw = test::raw_trajectory_probability(pairs, m, p.psi0);
        const double logp = trajectory_logprob(ts, m);
        if (raw > 0.0) {
            CHECK(logp == doctest::Approx(std::log(raw)).epsilon(1e-10));
            CHECK(logp <= 0.0);
        }
    }
}

TEST_CASE("dlogp_domega: flat log-probability has zero derivative") {
    const ModelParams p = params(4.0, 0.0, 1.0, 1);
    CHECK(dlogp_domega(p, BiasSchedule::unbiased(1), Bits{0}, 1e-4) == 0.0);
}

TEST_CASE("dlogp_domega: matches the Richardson-extrapolation oracle at N = 3") {
    const ModelParams p = params(10.0, 1.0, 1.0, 3);
    const BiasSchedule sched = BiasSchedule::unbiased(3);
    const double delta = default_fd_step(p.omega);
    for (unsigned v = 0; v < 8; ++v) {
        const Bits m = bits_of(v, 3);
        const double lib = dlogp_domega(p, sched, m, delta);
        const double oracle = test::richardson_derivative(
            [&](double w) {
                return trajectory_logprob(build_tilted_schedule(p.with_omega(w), sched), m);
            },
            p.omega, delta);
        CHECK(std::abs(lib - oracle) <= 5e-6 * std::max(1.0, std::abs(lib)));
    }
}

TEST_CASE("dlogp_domega: golden regression pins (first verified run)") {
    const ModelParams p = params(10.0, 1.0, 1.0, 5);
    const BiasSchedule sched = BiasSchedule::unbiased(5);
    const double delta = default_fd_step(p.omega);
    CHECK(dlogp_domega(p, sched, Bits{1, 0, 1, 0, 0}, delta) ==
          doctest::Approx(0.25464558238730284).epsilon(1e-12));
    CHECK(dlogp_domega(p, sched, Bits{0, 1, 0, 1, 1}, delta) ==
          doctest::Approx(0.11954438178474192).epsilon(1e-12));
}

TEST_CASE("dlogp_domega: undefined at zero-probability shifted points") {
    const ModelParams p = params(1.0, 0.0, 1.0, 2);
    CHECK_THROWS_AS(dlogp_domega(p, BiasSchedule::unbiased(2), Bits{1, 0}, 1e-4),
                    UndefinedDerivativeError);
}

TEST_CASE("dlogp_domega_checked: budget holds inside the quadratic regime") {
    // omega = 1 keeps the third omega-derivative of log P moderate.  At the
    // default step the budget holds for the bulk of records; shrinking the
    // step into the quadratic regime makes it hold for all of them.
    const ModelParams p = params(1.0, 1.0, 1.0, 10);
    const BiasSchedule sched = BiasSchedule::unbiased(10);
    const FiSampler sampler(p, sched, 0.0);
    int consistent_default = 0;
    const int n_probe = 60;
    for (std::uint64_t i = 0; i < n_probe; ++i) {
        const TrajectoryRecord rec = sampler.sample_record(11, 0, i);
        if (dlogp_domega_checked(p, sched, rec.outcomes, sampler.fd_step()).consistent)
            ++consistent_default;
        CHECK(dlogp_domega_checked(p, sched, rec.outcomes, 3e-5).consistent);
    }
    CHECK(consistent_default >= (n_probe * 9) / 10);
}

TEST_CASE("dlogp_domega_checked: the delta/2 gap scales quadratically at the paper point") {
    const ModelParams p = params(10.0, 1.0, 1.0, 20);
    const BiasSchedule sched = BiasSchedule::unbiased(20);
    const FiSampler sampler(p, sched, 0.0);
    const TrajectoryRecord rec = sampler.sample_record(123, 0, 0);
    auto gap = [&](double delta) {
        const FdDerivative fd = dlogp_domega_checked(p, sched, rec.outcomes, delta);
        return std::abs(fd.value - fd.half_step);
    };
    const double g1 = gap(1e-3);
    const double g2 = gap(5e-4);
    CHECK(g1 / g2 >= 3.0);
    CHECK(g1 / g2 <= 5.0);
}

TEST_CASE("trajectory_precision: composition and non-negativity") {
    const ModelParams flat = params(2.0, 0.0, 1.0, 3);
    const TrajectoryRecord rec =
        trajectory_precision(flat, BiasSchedule::unbiased(3), Bits{0, 0, 0}, 1e-4);
    CHECK(rec.f_m == 0.0);
    CHECK(rec.dlogp == 0.0);
    CHECK(rec.logp == 0.0);

    const ModelParams p = params(10.0, 1.0, 1.0, 6);
    const BiasSchedule sched = BiasSchedule::unbiased(6);
    RngStream rng(9, 0, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const Bits m = bits_of(static_cast<unsigned>(rng.next_u64() & 0x3Fu), 6);
        const double raw = tilted_trajectory_probability(build_tilted_schedule(p, sched), m);
        if (raw <= 0.0) continue;
        const TrajectoryRecord r = trajectory_precision(p, sched, m, 1e-4);
        CHECK(r.f_m == r.dlogp * r.dlogp);
        CHECK(r.f_m >= 0.0);
    }
}

TEST_CASE("trajectory_precision: per-trajectory spread covers orders of magnitude") {
    const ModelParams p = params(10.0, 1.0, 1.0, 20);
    const FiSampler sampler(p, BiasSchedule::unbiased(20), 0.0);
    double fmin = std::numeric_limits<double>::infinity(), fmax = 0.0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        const double f = sampler.sample_record(123, 0, i).f_m;
        fmin = std::min(fmin, f);
        fmax = std::max(fmax, f);
    }
    CHECK(fmax / std::max(fmin, 1e-300) >= 1e3);
}

TEST_CASE("estimate_fi_mc: no dissipation gives exactly zero") {
    const ModelParams p = params(5.0, 0.0, 1.0, 8);
    EstimateOptions opt;
    opt.n_traj = 500;
    opt.n_batches = 5;
    const FIEstimate est = estimate_fi_mc(p, BiasSchedule::unbiased(8), opt);
    CHECK(est.mean == 0.0);
    CHECK(est.std_err == 0.0);
}

TEST_CASE("estimate_fi_mc: agrees with enumeration at N = 10") {
    const ModelParams p = params(10.0, 1.0, 1.0, 10);
    const BiasSchedule sched = BiasSchedule::unbiased(10);
    EstimateOptions opt;
    opt.n_traj = 100000;
    opt.n_batches = 10;
    opt.seed = 99;
    const FIEstimate est = estimate_fi_mc(p, sched, opt);
    const EnumerationResult ex = exact_fi_enumerate(p, sched, default_fd_step(p.omega));
    CHECK(std::abs(ex.prob_mass - 1.0) <= 1e-9);
    CHECK(std::abs(est.mean - ex.fi) <= 3.0 * est.std_err);
    CHECK(est.std_err / est.mean <= 0.05);
}

TEST_CASE("estimate_fi_mc: identical results for any thread count") {
    const ModelParams p = params(10.0, 1.0, 1.0, 8);
    const BiasSchedule sched{1.0, std::vector<double>(8, 1.0)};
    EstimateOptions opt;
    opt.n_traj = 2000;
    opt.n_batches = 8;
    opt.seed = 4242;
    opt.threads = 1;
    const FIEstimate a = estimate_fi_mc(p, sched, opt);
    opt.threads = 4;
    const FIEstimate b = estimate_fi_mc(p, sched, opt);
    CHECK(a.mean == b.mean);
    CHECK(a.std_err == b.std_err);
}

TEST_CASE("estimate_from_values: batching preconditions") {
    const std::vector<double> vals{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(estimate_from_values(vals, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_from_values(vals, 4, 0), std::invalid_argument);
}

TEST_CASE("exact_fi_enumerate: trivial zero and the two-step expansion oracle") {
    CHECK(exact_fi_enumerate(params(1.0, 0.0, 1.0, 1), BiasSchedule::unbiased(1), 1e-4).fi ==
          0.0);

    // N = 2: direct sum over the four outcomes from raw operator products.
    const ModelParams p = params(10.0, 1.0, 1.0, 2);
    const BiasSchedule sched = BiasSchedule::unbiased(2);
    const double delta = default_fd_step(p.omega);
    double oracle = 0.0;
    for (unsigned v = 0; v < 4; ++v) {
        const Bits m = bits_of(v, 2);
        auto prob_at = [&](double w) {
            const ModelParams pw = p.with_omega(w);
            const std::vector<KrausPair> pairs(2, exact_kraus(pw));
            return test::raw_trajectory_probability(pairs, m, p.psi0);
        };
        const double prob = prob_at(p.omega);
        if (prob <= 0.0) continue;
        const double d =
            (std::log(prob_at(p.omega + delta)) - std::log(prob_at(p.omega - delta))) /
            (2.0 * delta);
        oracle += prob * d * d;
    }
    const EnumerationResult ex = exact_fi_enumerate(p, sched, delta);
    CHECK(ex.fi == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(std::abs(ex.prob_mass - 1.0) <= 1e-12);
}

TEST_CASE("exact_fi_enumerate: information is non-decreasing in collision count") {
    double prev = -1.0;
    for (int n = 1; n <= 8; ++n) {
        const ModelParams p = params(10.0, 1.0, 1.0, n);
        const EnumerationResult ex =
            exact_fi_enumerate(p, BiasSchedule::unbiased(n), default_fd_step(10.0));
        CHECK(ex.fi >= prev - 1e-9);
        CHECK(ex.fi >= 0.0);
        prev = ex.fi;
    }
}

TEST_CASE("exact_fi_enumerate: cap enforcement and prefix-parallel determinism") {
    CHECK_THROWS_AS(
        exact_fi_enumerate(params(1.0, 1.0, 1.0, 25), BiasSchedule::unbiased(25), 1e-4),
        EnumerationCapError);

    const ModelParams p = params(10.0, 1.0, 1.0, 11);  // above the 8-bit prefix split
    const BiasSchedule sched{0.5, std::vector<double>(11, -1.0)};
    const EnumerationResult a = exact_fi_enumerate(p, sched, 1e-3, 24, 1);
    const EnumerationResult b = exact_fi_enumerate(p, sched, 1e-3, 24, 4);
    CHECK(a.fi == b.fi);
    CHECK(a.prob_mass == b.prob_mass);
    CHECK(std::abs(a.prob_mass - 1.0) <= 1e-9);
}

TEST_CASE("fm_histogram: degenerate data, unit mass, mean annotation") {
    std::vector<TrajectoryRecord> records(10);
    for (auto& r : records) r.f_m = 2.5;
    BinSpec bins;
    bins.count = 8;
    const Histogram h = fm_histogram(records, bins);
    int occupied = 0;
    double mass = 0.0;
    for (double q : h.prob) {
        if (q > 0.0) ++occupied;
        mass += q;
    }
    CHECK(occupied == 1);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.fi_mean == doctest::Approx(2.5).epsilon(1e-15));

    RngStream rng(77, 0, 0);
    std::vector<double> values;
    for (int i = 0; i < 1000; ++i) values.push_back(rng.next_double() * 40.0);
    const Histogram h2 = fm_histogram_values(values, bins);
    double mass2 = 0.0;
    for (double q : h2.prob) mass2 += q;
    CHECK(mass2 == doctest::Approx(1.0).epsilon(1e-12));
}

}  // TEST_SUITE
