// bias.hpp — trace-preserving biased ("tilted") measurement maps.
//
// A bias schedule (s, b) reweights trajectory probabilities by
// exp(-s * sum_n b_n m_n).  The physical map realizing those probabilities
// dresses each Kraus pair with Hermitian normalizer matrices produced by a
// backward recursion anchored at the identity, and replaces the initial
// state by its dressed, renormalized image.

#pragma once

#include <span>
#include <vector>

#include "qtbias/collision.hpp"

namespace qtbias {

// Measurement outcomes in collision order (first collision first), 0 or 1.
using Bits = std::vector<int>;

struct BiasSchedule {
    double s = 0.0;          // global bias strength; 0 = unbiased
    std::vector<double> b;   // per-collision weights (strategies use ±1)

    static BiasSchedule unbiased(int n) { return {0.0, std::vector<double>(static_cast<std::size_t>(n), 1.0)}; }
};

// sum_n b_n m_n; lengths must agree.
double bias_energy(std::span<const double> b, const Bits& m);

struct TiltedStep {
    CMatrix k0;       // dressed no-click operator
    CMatrix k1;       // dressed click operator (carries exp(-s b_n / 2))
    CMatrix norm_op;  // Hermitian PSD normalizer after this collision
};

struct TiltedSchedule {
    std::vector<TiltedStep> steps;  // collision order
    CMatrix head_norm_op;           // normalizer before the first collision
    PureState psi0;                 // dressed, normalized initial state
    double initial_weight = 1.0;    // squared norm of head_norm_op applied to the raw state

    int n() const { return static_cast<int>(steps.size()); }
};

// Backward recursion over the dual map
//   E*_n[X] = k0† X k0 + exp(-s b_n) k1† X k1,
// starting from the identity after the last collision.  Throws
// DegenerateScheduleError (naming the collision) when a normalizer-squared
// matrix has min eigenvalue < 1e-12.
TiltedSchedule build_tilted_schedule(std::span<const KrausPair> kraus_per_step,
                                     const BiasSchedule& sched, const PureState& psi0);

// Same pair at every collision, built from exact_kraus(p).
TiltedSchedule build_tilted_schedule(const ModelParams& p, const BiasSchedule& sched);

// Exact unbiased reduction: identity normalizers, original pairs and state.
TiltedSchedule untilted_schedule(std::span<const KrausPair> kraus_per_step,
                                 const PureState& psi0);
TiltedSchedule untilted_schedule(const ModelParams& p);

// ||ktilde_{m_N} ... ktilde_{m_1} psi0||^2 for the dressed map; equals
// exp(-s B(m)) * P_raw(m) / initial_weight.
double tilted_trajectory_probability(const TiltedSchedule& ts, const Bits& m);

// Small-collision-time closed form of the squared normalizer after
// collision n (0 <= n <= N):  1 - A_n * gamma * dt * |e><e| with
// A_n = (N - n) - sum_{i=n+1..N} exp(-s b_i).
// Valid when N * gamma * dt << 1 and omega * dt << 1.
CMatrix closed_form_g_squared(int n, const BiasSchedule& sched, const ModelParams& p);

// First-order dressed pair: the original first-order pair with the
// dissipation rate rescaled to gamma * exp(-s_n).  The click operator is
// sqrt(exp(-s_n) gamma dt) s-.
KrausPair small_dt_tilted_kraus(const ModelParams& p, double s_n);

}  // namespace qtbias
