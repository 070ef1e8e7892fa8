#include "qtbias/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "qtbias/errors.hpp"
#include "qtbias/qmath.hpp"

namespace qtbias {

namespace {

// Lindblad generator for H = w sx, single channel s- at rate gamma.
CMatrix lme_rhs(const CMatrix& rho, double omega, double gamma) {
    const CMatrix h = pauli_x() * omega;
    CMatrix out = (h * rho - rho * h) * cplx(0.0, -1.0);
    const CMatrix sm = sigma_minus();
    const CMatrix pe = excited_projector();
    out += (sm * rho * sigma_plus() - (pe * rho + rho * pe) * 0.5) * gamma;
    return out;
}

CMatrix rk4_step(const CMatrix& rho, double omega, double gamma, double dt) {
    const CMatrix k1 = lme_rhs(rho, omega, gamma);
    const CMatrix k2 = lme_rhs(rho + k1 * (0.5 * dt), omega, gamma);
    const CMatrix k3 = lme_rhs(rho + k2 * (0.5 * dt), omega, gamma);
    const CMatrix k4 = lme_rhs(rho + k3 * dt, omega, gamma);
    return rho + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
}

}  // namespace

EvolutionTrace integrate_lme(double omega, double gamma, const CMatrix& rho0,
                             double t_final, double dt_int, int snapshot_stride) {
    if (!(dt_int > 0.0) || !(t_final >= 0.0))
        throw std::invalid_argument("integrate_lme: bad time arguments");
    if (gamma * dt_int > 1e-2 || std::abs(omega) * dt_int > 1e-2)
        throw StepSizeError("integrate_lme: require gamma*dt <= 1e-2 and omega*dt <= 1e-2");
    if (rho0.dim() != 2) throw std::invalid_argument("integrate_lme: rho0 must be 2x2");
    if (snapshot_stride < 1) snapshot_stride = 1;

    const long n_steps = std::lround(t_final / dt_int);
    EvolutionTrace trace;
    CMatrix rho = rho0;
    trace.times.push_back(0.0);
    trace.states.push_back(rho);
    for (long step = 1; step <= n_steps; ++step) {
        rho = rk4_step(rho, omega, gamma, dt_int);
        if (step % snapshot_stride == 0 || step == n_steps) {
            trace.times.push_back(static_cast<double>(step) * dt_int);
            trace.states.push_back(rho);
        }
    }
    return trace;
}

EvolutionTrace sample_sse(double omega, double gamma, const PureState& psi0,
                          double t_final, double dt_int, RngStream& rng,
                          int snapshot_stride) {
    if (!(dt_int > 0.0) || !(t_final >= 0.0))
        throw std::invalid_argument("sample_sse: bad time arguments");
    if (gamma * dt_int > 1e-3)
        throw StepSizeError("sample_sse: require gamma*dt <= 1e-3");
    if (snapshot_stride < 1) snapshot_stride = 1;

    // Non-Hermitian drift 1 - dt (i w sx + gamma/2 |e><e|).
    CMatrix drift = CMatrix::identity(2);
    drift -= pauli_x() * cplx(0.0, omega * dt_int);
    drift -= excited_projector() * (0.5 * gamma * dt_int);

    const long n_steps = std::lround(t_final / dt_int);
    EvolutionTrace trace;
    PureState psi = psi0.normalized();
    long clicks = 0;
    trace.times.push_back(0.0);
    trace.pure_states.push_back(psi);
    trace.channel_counts.push_back(0);
    for (long step = 1; step <= n_steps; ++step) {
        const double p1 = gamma * dt_int * std::norm(psi.amp[0]);
        if (p1 > 0.1) throw StepSizeError("sample_sse: jump probability above 0.1 in a step");
        if (rng.next_double() < p1) {
            psi = apply(sigma_minus(), psi).normalized();
            ++clicks;
            trace.click_times.push_back(static_cast<double>(step) * dt_int);
        } else {
            psi = apply(drift, psi).normalized();
        }
        if (step % snapshot_stride == 0 || step == n_steps) {
            trace.times.push_back(static_cast<double>(step) * dt_int);
            trace.pure_states.push_back(psi);
            trace.channel_counts.push_back(clicks);
        }
    }
    return trace;
}

std::vector<LimitErrorPoint> collision_limit_error(const ModelParams& base, double t_final,
                                                   std::span<const double> dt_list,
                                                   double dt_int_ref) {
    if (dt_list.empty())
        throw std::invalid_argument("collision_limit_error: empty dt list");
    for (double dt : dt_list) {
        const double steps = t_final / dt;
        if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
            throw std::invalid_argument("collision_limit_error: every dt must divide t_final");
    }
    const CMatrix rho0 = outer(base.psi0.normalized());
    if (dt_int_ref <= 0.0) {
        const double scale = std::max({base.gamma, std::abs(base.omega), 1.0});
        dt_int_ref = 1e-3 / scale;
        // land exactly on t_final
        const double n = std::ceil(t_final / dt_int_ref);
        dt_int_ref = t_final / n;
    }
    const int ref_stride =
        static_cast<int>(std::max<long>(1, std::lround(t_final / dt_int_ref)));
    const EvolutionTrace ref =
        integrate_lme(base.omega, base.gamma, rho0, t_final, dt_int_ref, ref_stride);
    const CMatrix rho_ref = ref.states.back();

    std::vector<LimitErrorPoint> out;
    out.reserve(dt_list.size());
    for (double dt : dt_list) {
        ModelParams p = base;
        p.dt = dt;
        p.n_collisions = 1;  // pair only; iteration count comes from t_final
        const KrausPair k = exact_kraus(p);
        const long n_steps = std::lround(t_final / dt);
        CMatrix rho = rho0;
        for (long i = 0; i < n_steps; ++i) rho = apply_channel(rho, k);
        out.push_back({dt, trace_distance(rho, rho_ref)});
    }
    return out;
}

}  // namespace qtbias
