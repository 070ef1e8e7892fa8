#include "qtbias/bias.hpp"

#include <cmath>
#include <stdexcept>

#include "qtbias/errors.hpp"
#include "qtbias/qmath.hpp"

namespace qtbias {

namespace {

CMatrix hermitize(const CMatrix& m) {
    CMatrix r(m.dim());
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) r(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
    return r;
}

}  // namespace

double bias_energy(std::span<const double> b, const Bits& m) {
    if (b.size() != m.size())
        throw std::invalid_argument("bias_energy: weight/outcome length mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) e += b[i] * static_cast<double>(m[i]);
    return e;
}

TiltedSchedule build_tilted_schedule(std::span<const KrausPair> kraus_per_step,
                                     const BiasSchedule& sched, const PureState& psi0) {
    const int n = static_cast<int>(kraus_per_step.size());
    if (n < 1) throw std::invalid_argument("build_tilted_schedule: need at least one collision");
    if (static_cast<int>(sched.b.size()) != n)
        throw std::invalid_argument("build_tilted_schedule: bias weights must match collision count");

    // Backward pass: norm_sq[k] is the squared normalizer after collision k.
    std::vector<CMatrix> norm(static_cast<std::size_t>(n) + 1);
    norm[static_cast<std::size_t>(n)] = CMatrix::identity(2);
    CMatrix norm_sq = CMatrix::identity(2);
    for (int step = n; step >= 1; --step) {
        const KrausPair& k = kraus_per_step[static_cast<std::size_t>(step - 1)];
        const double w = std::exp(-sched.s * sched.b[static_cast<std::size_t>(step - 1)]);
        norm_sq = hermitize(k.k0.adjoint() * norm_sq * k.k0 + (k.k1.adjoint() * norm_sq * k.k1) * w);
        const double ev = min_herm_eigenvalue(norm_sq);
        if (ev < 1e-12) throw DegenerateScheduleError(step, ev);
        norm[static_cast<std::size_t>(step - 1)] = psd_sqrt(norm_sq);
    }

    TiltedSchedule ts;
    ts.steps.resize(static_cast<std::size_t>(n));
    for (int step = 1; step <= n; ++step) {
        const KrausPair& k = kraus_per_step[static_cast<std::size_t>(step - 1)];
        const CMatrix inv = psd_inverse(norm[static_cast<std::size_t>(step - 1)]);
        const CMatrix& after = norm[static_cast<std::size_t>(step)];
        const double amp = std::exp(-0.5 * sched.s * sched.b[static_cast<std::size_t>(step - 1)]);
        TiltedStep& out = ts.steps[static_cast<std::size_t>(step - 1)];
        out.k0 = after * k.k0 * inv;
        out.k1 = (after * k.k1 * inv) * amp;
        out.norm_op = after;
    }
    ts.head_norm_op = norm[0];
    const PureState dressed = apply(ts.head_norm_op, psi0);
    ts.initial_weight = dressed.norm2();
    if (ts.initial_weight <= 0.0)
        throw DegenerateScheduleError(0, ts.initial_weight);
    ts.psi0 = dressed.normalized();
    return ts;
}

TiltedSchedule build_tilted_schedule(const ModelParams& p, const BiasSchedule& sched) {
    p.validate();
    const std::vector<KrausPair> pairs(static_cast<std::size_t>(p.n_collisions), exact_kraus(p));
    return build_tilted_schedule(pairs, sched, p.psi0);
}

TiltedSchedule untilted_schedule(std::span<const KrausPair> kraus_per_step,
                                 const PureState& psi0) {
    const int n = static_cast<int>(kraus_per_step.size());
    if (n < 1) throw std::invalid_argument("untilted_schedule: need at least one collision");
    TiltedSchedule ts;
    ts.steps.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ts.steps[static_cast<std::size_t>(i)] = {kraus_per_step[static_cast<std::size_t>(i)].k0,
                                                 kraus_per_step[static_cast<std::size_t>(i)].k1,
                                                 CMatrix::identity(2)};
    }
    ts.head_norm_op = CMatrix::identity(2);
    ts.psi0 = psi0.normalized();
    ts.initial_weight = psi0.norm2();
    return ts;
}

TiltedSchedule untilted_schedule(const ModelParams& p) {
    p.validate();
    const std::vector<KrausPair> pairs(static_cast<std::size_t>(p.n_collisions), exact_kraus(p));
    return untilted_schedule(pairs, p.psi0);
}

double tilted_trajectory_probability(const TiltedSchedule& ts, const Bits& m) {
    if (static_cast<int>(m.size()) != ts.n())
        throw std::invalid_argument("tilted_trajectory_probability: outcome length mismatch");
    PureState psi = ts.psi0;
    double prob = 1.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const TiltedStep& st = ts.steps[i];
        const PureState next = apply(m[i] == 1 ? st.k1 : st.k0, psi);
        const double q = next.norm2();
        prob *= q;
        if (prob == 0.0) return 0.0;
        psi = next.normalized();
    }
    return prob;
}

CMatrix closed_form_g_squared(int n, const BiasSchedule& sched, const ModelParams& p) {
    p.validate();
    const int total = static_cast<int>(sched.b.size());
    if (n < 0 || n > total)
        throw std::invalid_argument("closed_form_g_squared: step index out of range");
    double tail = 0.0;
    for (int i = n + 1; i <= total; ++i)
        tail += std::exp(-sched.s * sched.b[static_cast<std::size_t>(i - 1)]);
    const double a_n = static_cast<double>(total - n) - tail;
    CMatrix g2 = CMatrix::identity(2);
    g2 -= excited_projector() * (a_n * p.gamma * p.dt);
    return g2;
}

KrausPair small_dt_tilted_kraus(const ModelParams& p, double s_n) {
    p.validate();
    const double w = std::exp(-s_n);
    CMatrix k0 = CMatrix::identity(2);
    k0 -= pauli_x() * cplx(0.0, p.omega * p.dt);
    k0 -= excited_projector() * (0.5 * w * p.gamma * p.dt);
    const CMatrix k1 = sigma_minus() * std::sqrt(w * p.gamma * p.dt);
    return {k0, k1};
}

}  // namespace qtbias
