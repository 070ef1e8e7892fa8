// collision.hpp — system–ancilla collision model of a monitored driven qubit:
// the joint Hamiltonian, exact and first-order Kraus pairs, and the
// unconditional channel.

#pragma once

#include "qtbias/cmatrix.hpp"

namespace qtbias {

struct ModelParams {
    double omega = 10.0;   // drive strength (the parameter to estimate), 1/time
    double gamma = 1.0;    // dissipation rate, 1/time
    double dt = 1.0;       // collision duration
    int n_collisions = 20;
    PureState psi0 = PureState::ground();

    // gamma >= 0, dt > 0, n_collisions >= 1, |psi0| = 1 within 1e-12.
    void validate() const;

    ModelParams with_omega(double w) const {
        ModelParams p = *this;
        p.omega = w;
        return p;
    }
};

// One collision's conditional-update operators: k0 = no click, k1 = click.
struct KrausPair {
    CMatrix k0;
    CMatrix k1;
};

// omega (sx ⊗ 1) + sqrt(gamma/dt) (s+ ⊗ s- + s- ⊗ s+) on the joint basis
// {|e,1>, |e,0>, |g,1>, |g,0>}; the exchange term couples |e,0> and |g,1>.
CMatrix build_hamiltonian(const ModelParams& p);

// K_m = <m| exp(-i H dt) |0> over the ancilla; completeness defect <= 1e-12.
KrausPair exact_kraus(const ModelParams& p);

// First order in dt: K0 = 1 - i w dt sx - (gamma/2) dt |e><e|,
// K1 = sqrt(gamma dt) s-.  Intended regime gamma*dt, omega*dt << 1.
KrausPair first_order_kraus(const ModelParams& p);

// Unconditional channel rho -> k0 rho k0† + k1 rho k1†; validates rho.
CMatrix apply_channel(const CMatrix& rho, const KrausPair& k);

// max-entry norm of k0†k0 + k1†k1 - 1.
double completeness_defect(const KrausPair& k);

}  // namespace qtbias
