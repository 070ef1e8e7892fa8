#include <doctest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "qtbias/errors.hpp"
#include "qtbias/bias.hpp"
#include "qtbias/qmath.hpp"

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

double tilted_completeness(const TiltedSchedule& ts) {
    double worst = 0.0;
    for (const TiltedStep& st : ts.steps) {
        const CMatrix sum = st.k0.adjoint() * st.k0 + st.k1.adjoint() * st.k1;
        worst = std::max(worst, max_abs_diff(sum, CMatrix::identity(2)));
    }
    return worst;
}

Bits bits_of(unsigned value, int n) {
    Bits m(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = (value >> i) & 1u;
    return m;
}

}  // namespace

TEST_SUITE("bias") {

TEST_CASE("bias_energy: direct sums and the matching-pattern identity") {
    CHECK(bias_energy(std::vector<double>{1, -1, 1}, Bits{1, 0, 1}) == 2.0);
    CHECK(bias_energy(std::vector<double>{0.3, -2, 5}, Bits{0, 0, 0}) == 0.0);
    CHECK_THROWS_AS(bias_energy(std::vector<double>{1.0}, Bits{1, 0}),
                    std::invalid_argument);

    // b_n = (-1)^{m_n} rewards records matching m: energy = -(#ones)
    const Bits m{1, 0, 1, 1, 0};
    std::vector<double> b;
    for (int bit : m) b.push_back(bit == 1 ? -1.0 : 1.0);
    CHECK(bias_energy(b, m) == -3.0);
}

TEST_CASE("build_tilted_schedule: s = 0 reduces to the raw map") {
    const ModelParams p = params(10.0, 1.0, 1.0, 5);
    const KrausPair raw = exact_kraus(p);
    BiasSchedule sched{0.0, {1, -1, 1, -1, 1}};  // b irrelevant at s = 0
    const TiltedSchedule ts = build_tilted_schedule(p, sched);
    for (const TiltedStep& st : ts.steps) {
        CHECK(max_abs_diff(st.k0, raw.k0) <= 1e-12);
        CHECK(max_abs_diff(st.k1, raw.k1) <= 1e-12);
        CHECK(max_abs_diff(st.norm_op, CMatrix::identity(2)) <= 1e-12);
    }
    CHECK(max_abs_diff(ts.head_norm_op, CMatrix::identity(2)) <= 1e-12);
    CHECK(ts.initial_weight == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ts.psi0.amp[0] - p.psi0.amp[0]) <= 1e-12);
    CHECK(std::abs(ts.psi0.amp[1] - p.psi0.amp[1]) <= 1e-12);
}

TEST_CASE("build_tilted_schedule: the final normalizer is exactly the identity") {
    const ModelParams p = params(10.0, 1.0, 1.0, 3);
    const TiltedSchedule ts = build_tilted_schedule(p, BiasSchedule{1.0, {1, 1, 1}});
    CHECK(max_abs_diff(ts.steps.back().norm_op, CMatrix::identity(2)) == 0.0);
}

TEST_CASE("build_tilted_schedule: N = 3 recursion against the closed-form oracle") {
    const ModelParams p = params(10.0, 1.0, 1.0, 3);
    const std::vector<KrausPair> pairs(3, exact_kraus(p));
    const std::vector<double> b{1, 1, 1};
    const TiltedSchedule ts = build_tilted_schedule(pairs, BiasSchedule{1.0, b}, p.psi0);
    const test::RecursionOracle oracle = test::tilted_recursion_oracle(pairs, 1.0, b);

    CHECK(max_abs_diff(ts.head_norm_op, oracle.norm_ops[0]) <= 1e-10);
    for (int n = 0; n < 3; ++n) {
        const auto idx = static_cast<std::size_t>(n);
        CHECK(max_abs_diff(ts.steps[idx].norm_op, oracle.norm_ops[idx + 1]) <= 1e-10);
        CHECK(max_abs_diff(ts.steps[idx].k0, oracle.k0[idx]) <= 1e-10);
        CHECK(max_abs_diff(ts.steps[idx].k1, oracle.k1[idx]) <= 1e-10);
    }
}

TEST_CASE("build_tilted_schedule: completeness and PSD normalizers on random schedules") {
    RngStream rng(31, 0, 0);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_double() * 6);
        const ModelParams p = params(20.0 * rng.next_double(), 0.1 + 1.5 * rng.next_double(),
                                     1.0, n);
        BiasSchedule sched;
        sched.s = 3.0 * rng.next_double();
        for (int i = 0; i < n; ++i) sched.b.push_back(rng.next_double() < 0.5 ? -1.0 : 1.0);
        const TiltedSchedule ts = build_tilted_schedule(p, sched);
        CHECK(tilted_completeness(ts) <= 1e-10);
        for (const TiltedStep& st : ts.steps) {
            CHECK(st.norm_op.hermiticity_defect() <= 1e-10);
            CHECK(min_herm_eigenvalue(st.norm_op) >= -1e-10);
        }
        CHECK(std::abs(ts.psi0.norm2() - 1.0) <= 1e-10);
    }
}

TEST_CASE("tilted_trajectory_probability: normalization, unbiased reduction, ratio identity") {
    const int n = 6;
    const ModelParams p = params(10.0, 1.0, 1.0, n);
    const std::vector<KrausPair> pairs(static_cast<std::size_t>(n), exact_kraus(p));

    for (double s : {0.0, 1.0, 3.0}) {
        for (double sign : {1.0, -1.0}) {
            const BiasSchedule sched{s, std::vector<double>(static_cast<std::size_t>(n), sign)};
            const TiltedSchedule ts = build_tilted_schedule(pairs, sched, p.psi0);
            double mass = 0.0;
            for (unsigned v = 0; v < (1u << n); ++v) {
                const Bits m = bits_of(v, n);
                const double prob = tilted_trajectory_probability(ts, m);
                mass += prob;
                // identity: prob * weight = exp(-s B) * raw probability
                const double raw = test::raw_trajectory_probability(pairs, m, p.psi0);
                const double expect = std::exp(-s * bias_energy(sched.b, m)) * raw;
                CHECK(prob * ts.initial_weight == doctest::Approx(expect).epsilon(1e-10));
                if (s == 0.0) CHECK(prob == doctest::Approx(raw).epsilon(1e-10));
            }
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("closed_form_g_squared: unbiased identity and the worked ln-2 value") {
    const ModelParams p3 = params(1.0, 1.0, 1e-3, 3);
    const BiasSchedule zero{0.0, {1, 1, 1}};
    for (int n = 0; n <= 3; ++n)
        CHECK(max_abs_diff(closed_form_g_squared(n, zero, p3), CMatrix::identity(2)) == 0.0);

    // N = 3, n = 1, s b_i = ln 2 for all i: A_1 = 2 - 2*(1/2) = 1.
    const BiasSchedule ln2{std::log(2.0), {1, 1, 1}};
    CMatrix expect = CMatrix::identity(2);
    expect -= excited_projector() * (p3.gamma * p3.dt);
    CHECK(max_abs_diff(closed_form_g_squared(1, ln2, p3), expect) <= 1e-15);
}

TEST_CASE("closed_form_g_squared: second-order agreement with the first-order recursion") {
    // gamma = omega = 1 with dt = 1e-3, then dt halves (so gamma dt and
    // omega dt halve with it); N = 10, uniform s_n = ln 2.
    auto max_err = [](double dt) {
        const int n = 10;
        const ModelParams p = params(1.0, 1.0, dt, n);
        const BiasSchedule sched{std::log(2.0),
                                 std::vector<double>(static_cast<std::size_t>(n), 1.0)};
        const std::vector<KrausPair> pairs(static_cast<std::size_t>(n), first_order_kraus(p));
        const TiltedSchedule ts = build_tilted_schedule(pairs, sched, p.psi0);
        double worst = 0.0;
        for (int step = 0; step < n; ++step) {
            const auto idx = static_cast<std::size_t>(step);
            const CMatrix g2 = ts.steps[idx].norm_op * ts.steps[idx].norm_op;
            worst = std::max(worst,
                             max_abs_diff(g2, closed_form_g_squared(step + 1, sched, p)));
        }
        const CMatrix g0sq = ts.head_norm_op * ts.head_norm_op;
        worst = std::max(worst, max_abs_diff(g0sq, closed_form_g_squared(0, sched, p)));
        return worst;
    };
    const double e1 = max_err(1e-3);
    const double e2 = max_err(5e-4);
    CHECK(e1 > 0.0);
    CHECK(e1 / e2 >= 3.0);
    CHECK(e1 / e2 <= 5.0);
}

TEST_CASE("small_dt_tilted_kraus: reductions and the rescaled click norm") {
    const ModelParams p = params(0.5, 1.0, 0.04, 1);
    const KrausPair plain = small_dt_tilted_kraus(p, 0.0);
    const KrausPair first = first_order_kraus(p);
    CHECK(max_abs_diff(plain.k0, first.k0) == 0.0);
    CHECK(max_abs_diff(plain.k1, first.k1) == 0.0);

    // s_n = ln 4, gamma dt = 0.04: ||K1|| = sqrt(0.04 / 4) = 0.1
    const KrausPair tilted = small_dt_tilted_kraus(p, std::log(4.0));
    CHECK(test::operator_norm_2x2(tilted.k1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("small_dt_tilted_kraus: approach to the dressed first-order recursion") {
    // Dressing corrections enter the no-click operator at O(dt^2) but the
    // click amplitude at O(dt^{3/2}) (an O(dt) factor on a sqrt(dt) entry).
    auto errs = [](double dt) {
        const int n = 6;
        const ModelParams p = params(1.0, 1.0, dt, n);
        const double s_n = 0.7;
        const BiasSchedule sched{s_n, std::vector<double>(static_cast<std::size_t>(n), 1.0)};
        const std::vector<KrausPair> pairs(static_cast<std::size_t>(n), first_order_kraus(p));
        const TiltedSchedule ts = build_tilted_schedule(pairs, sched, p.psi0);
        const KrausPair simple = small_dt_tilted_kraus(p, s_n);
        double e0 = 0.0, e1 = 0.0;
        for (const TiltedStep& st : ts.steps) {
            e0 = std::max(e0, max_abs_diff(st.k0, simple.k0));
            e1 = std::max(e1, max_abs_diff(st.k1, simple.k1));
        }
        return std::array<double, 2>{e0, e1};
    };
    const auto a = errs(1e-3);
    const auto b = errs(5e-4);
    CHECK(a[0] / b[0] >= 3.0);
    CHECK(a[0] / b[0] <= 5.0);
    CHECK(a[1] / b[1] >= 2.5);
    CHECK(a[1] / b[1] <= 3.2);
}

TEST_CASE("build_tilted_schedule: over-biased schedules fail loudly with the step") {
    // gamma dt = (pi/2)^2 makes the no-click operator singular on |e>;
    // suppressing clicks (exp(-s) below the 1e-12 floor) then starves one
    // direction of the normalizer.
    const double gdt = (M_PI / 2.0) * (M_PI / 2.0);
    const ModelParams p = params(0.0, gdt, 1.0, 3);
    const BiasSchedule sched{30.0, {1, 1, 1}};
    CHECK_THROWS_AS(build_tilted_schedule(p, sched), DegenerateScheduleError);
    try {
        build_tilted_schedule(p, sched);
    } catch (const DegenerateScheduleError& e) {
        CHECK(e.step >= 1);
        CHECK(e.step <= 3);
        CHECK(e.eigenvalue < 1e-12);
    }
}

TEST_CASE("untilted_schedule: exact identity dressing") {
    const ModelParams p = params(10.0, 1.0, 1.0, 4);
    const TiltedSchedule ts = untilted_schedule(p);
    CHECK(tilted_completeness(ts) <= 1e-12);
    CHECK(max_abs_diff(ts.head_norm_op, CMatrix::identity(2)) == 0.0);
    CHECK(ts.initial_weight == 1.0);
}

}  // TEST_SUITE
