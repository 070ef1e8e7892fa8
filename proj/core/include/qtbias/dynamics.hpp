// dynamics.hpp — continuous-time references for the collision model: a
// fixed-step Lindblad master-equation integrator, a jump-unravelled
// stochastic Schrödinger sampler, and the collision-limit convergence check.

#pragma once

#include <span>
#include <vector>

#include "qtbias/collision.hpp"
#include "qtbias/rng.hpp"

namespace qtbias {

struct EvolutionTrace {
    std::vector<double> times;
    std::vector<CMatrix> states;          // density snapshots (LME runs)
    std::vector<PureState> pure_states;   // conditional snapshots (SSE runs)
    std::vector<long> channel_counts;     // cumulative clicks at snapshot times (SSE)
    std::vector<double> click_times;      // every click time (SSE)
};

// 4th-order fixed-step integration of
//   drho/dt = -i[w sx, rho] + gamma (s- rho s+ - 1/2 {|e><e|, rho}).
// Preconditions: gamma*dt_int <= 1e-2 and omega*dt_int <= 1e-2.
EvolutionTrace integrate_lme(double omega, double gamma, const CMatrix& rho0,
                             double t_final, double dt_int, int snapshot_stride = 1);

// Jump unravelling: per step, click with p1 = gamma dt <e-projector>, else
// renormalized non-Hermitian drift.  Precondition gamma*dt_int <= 1e-3; a
// step with p1 > 0.1 raises StepSizeError.
EvolutionTrace sample_sse(double omega, double gamma, const PureState& psi0,
                          double t_final, double dt_int, RngStream& rng,
                          int snapshot_stride = 1);

struct LimitErrorPoint {
    double dt = 0.0;
    double error = 0.0;  // trace distance to the LME state at t_final
};

// Iterate the exact collision channel over t_final/dt steps for each dt and
// report the trace-norm distance to the integrated LME at t_final.
// Each dt must divide t_final.
std::vector<LimitErrorPoint> collision_limit_error(const ModelParams& base, double t_final,
                                                   std::span<const double> dt_list,
                                                   double dt_int_ref = 0.0);

}  // namespace qtbias
