#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qtbias/errors.hpp"
#include "qtbias/optimize.hpp"

using namespace qtbias;

namespace {

ModelParams paper_point(int n) {
    ModelParams p;
    p.omega = 10.0;
    p.gamma = 1.0;
    p.dt = 1.0;
    p.n_collisions = n;
    return p;
}

OptimizeOptions quick_options() {
    OptimizeOptions opt;
    opt.n_traj = 5000;
    opt.n_batches = 10;
    opt.seed = 31337;
    opt.target_rel_err = 0.05;
    opt.n_traj_cap = 200000;
    return opt;
}

double combined_stderr(const FIEstimate& a, const FIEstimate& b) {
    return std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
}

}  // namespace

TEST_SUITE("optimize") {

TEST_CASE("select_max_precision_trajectory: argmax and lexicographic ties") {
    TrajectoryRecord lo;
    lo.outcomes = {1, 0};
    lo.f_m = 1.0;
    TrajectoryRecord hi;
    hi.outcomes = {0, 1};
    hi.f_m = 2.0;
    const std::vector<TrajectoryRecord> records{lo, hi};
    CHECK(select_max_precision_trajectory(records) == Bits{0, 1});

    TrajectoryRecord tie_a;
    tie_a.outcomes = {1, 0, 0};
    tie_a.f_m = 2.0;
    TrajectoryRecord tie_b;
    tie_b.outcomes = {0, 1, 1};
    tie_b.f_m = 2.0;
    const std::vector<TrajectoryRecord> ties{tie_a, tie_b};
    CHECK(select_max_precision_trajectory(ties) == Bits{0, 1, 1});

    CHECK_THROWS_AS(select_max_precision_trajectory(std::vector<TrajectoryRecord>{}),
                    std::invalid_argument);
}

TEST_CASE("replay-based selection agrees with the record-based operation") {
    const ModelParams p = paper_point(8);
    const BiasSchedule sched = BiasSchedule::unbiased(8);
    const FiSampler sampler(p, sched, 0.0);
    std::vector<TrajectoryRecord> records;
    std::vector<double> f_values;
    for (std::uint64_t i = 0; i < 400; ++i) {
        records.push_back(sampler.sample_record(55, 3, i));
        f_values.push_back(records.back().f_m);
    }
    CHECK(max_precision_outcomes(sampler, 55, 3, f_values) ==
          select_max_precision_trajectory(records));
}

TEST_CASE("run_global: s = 0 reproduces the unbiased information") {
    const OptimizationReport rep = run_global(paper_point(20), 0.0, quick_options());
    CHECK(std::abs(rep.fi_biased.mean - rep.fi_unbiased.mean) <=
          3.0 * combined_stderr(rep.fi_biased, rep.fi_unbiased));
    CHECK(static_cast<int>(rep.b.size()) == 20);
    for (std::size_t i = 0; i < rep.b.size(); ++i) {
        CHECK(std::abs(rep.b[i]) == 1.0);
        CHECK(rep.b[i] == (rep.m_max[i] == 1 ? -1.0 : 1.0));
    }
}

TEST_CASE("run_global: s = 3 at the operating point enhances the information") {
    const OptimizationReport rep = run_global(paper_point(20), 3.0, quick_options());
    CHECK(rep.fi_biased.mean - rep.fi_unbiased.mean >=
          5.0 * combined_stderr(rep.fi_biased, rep.fi_unbiased));
    CHECK(rep.step1_converged);
    CHECK(!rep.diagnostics.empty());
}

TEST_CASE("run_global: overwhelming bias collapses the information") {
    const OptimizationReport rep = run_global(paper_point(20), 20.0, quick_options());
    CHECK(rep.fi_biased.mean <= 0.05 * rep.fi_unbiased.mean);
}

TEST_CASE("run_global: reports are reproducible from (config, seed)") {
    OptimizeOptions opt = quick_options();
    const OptimizationReport a = run_global(paper_point(12), 2.0, opt);
    opt.threads = 4;
    const OptimizationReport b = run_global(paper_point(12), 2.0, opt);
    CHECK(a.m_max == b.m_max);
    CHECK(a.fi_biased.mean == b.fi_biased.mean);
    CHECK(a.fi_biased.std_err == b.fi_biased.std_err);
    CHECK(a.fi_unbiased.mean == b.fi_unbiased.mean);
}

TEST_CASE("run_local: s = 0 reproduces the unbiased information") {
    const OptimizationReport rep = run_local(paper_point(20), 0.0, quick_options());
    CHECK(std::abs(rep.fi_biased.mean - rep.fi_unbiased.mean) <=
          3.0 * combined_stderr(rep.fi_biased, rep.fi_unbiased));
}

TEST_CASE("run_local: s = 1 improves on unbiased but below the global optimum") {
    const OptimizeOptions opt = quick_options();
    const OptimizationReport local = run_local(paper_point(20), 1.0, opt);
    CHECK(local.fi_biased.mean - local.fi_unbiased.mean >=
          3.0 * combined_stderr(local.fi_biased, local.fi_unbiased));

    const OptimizationReport global = run_global(paper_point(20), 3.0, opt);
    CHECK(global.fi_biased.mean > local.fi_biased.mean);
}

TEST_CASE("run_local: no jump channel forces the ground-biased branch") {
    ModelParams p = paper_point(6);
    p.gamma = 0.0;
    const OptimizationReport rep = run_local(p, 1.5, quick_options());
    for (double b : rep.b) CHECK(b == 1.0);
    for (int m : rep.m_max) CHECK(m == 0);
    CHECK(rep.fi_biased.mean == 0.0);
}

TEST_CASE("run_local: alternative sensitivity readings stay within contract") {
    for (LocalSensitivityMode mode :
         {LocalSensitivityMode::one_step_fi, LocalSensitivityMode::weighted}) {
        OptimizeOptions opt = quick_options();
        opt.local_mode = mode;
        opt.n_traj = 2000;
        const OptimizationReport rep = run_local(paper_point(10), 1.0, opt);
        CHECK(static_cast<int>(rep.b.size()) == 10);
        for (std::size_t i = 0; i < rep.b.size(); ++i) {
            CHECK(std::abs(rep.b[i]) == 1.0);
            CHECK(rep.m_max[i] == (rep.b[i] < 0 ? 1 : 0));
        }
        CHECK(rep.fi_biased.mean >= 0.0);
    }
}

TEST_CASE("sweep_bias_strength: baseline anchor inserted, points preserved") {
    const std::vector<double> s_values{0.5, 1.0};
    const auto points =
        sweep_bias_strength(paper_point(8), Strategy::global, s_values, quick_options());
    REQUIRE(points.size() == 3);
    CHECK(points[0].s == 0.0);
    CHECK(points[1].s == 0.5);
    CHECK(points[2].s == 1.0);
    for (const SweepPoint& pt : points) {
        CHECK(pt.ok);
        CHECK(pt.report.fi_unbiased.mean == points[0].report.fi_unbiased.mean);
    }
}

TEST_CASE("sweep_bias_strength: per-point failures are recorded, sweep continues") {
    // omega = 0 from |g> is a dark state: the unbiased ensemble is the
    // all-zero record, so the global choice is b = +1 everywhere; at
    // gamma dt = (pi/2)^2 and s = 30 the dressed map degenerates.
    ModelParams p;
    p.omega = 0.0;
    p.gamma = (M_PI / 2.0) * (M_PI / 2.0);
    p.dt = 1.0;
    p.n_collisions = 4;
    OptimizeOptions opt = quick_options();
    opt.n_traj = 200;
    const std::vector<double> s_values{0.0, 30.0};
    const auto points = sweep_bias_strength(p, Strategy::global, s_values, opt);
    REQUIRE(points.size() == 2);
    CHECK(points[0].ok);
    CHECK(!points[1].ok);
    CHECK(points[1].error.find("degenerate") != std::string::npos);
}

TEST_CASE("sweep_bias_strength: local strategy shares one unbiased baseline") {
    const std::vector<double> s_values{0.0, 1.0};
    const auto points =
        sweep_bias_strength(paper_point(8), Strategy::local, s_values, quick_options());
    REQUIRE(points.size() == 2);
    CHECK(points[0].report.fi_unbiased.mean == points[1].report.fi_unbiased.mean);
}

}  // TEST_SUITE
