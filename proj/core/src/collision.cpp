#include "qtbias/collision.hpp"

#include <cmath>
#include <stdexcept>

#include "qtbias/errors.hpp"
#include "qtbias/qmath.hpp"

namespace qtbias {

namespace {

// Ancilla operators in the local {|1>, |0>} ordering used by the joint basis.
CMatrix anc_raise() {  // |1><0|
    CMatrix m(2);
    m(0, 1) = 1.0;
    return m;
}

CMatrix anc_lower() {  // |0><1|
    CMatrix m(2);
    m(1, 0) = 1.0;
    return m;
}

// Partial matrix element <anc_out| U |anc_in> of a joint 4x4 operator.
// Ancilla basis ordering {|1>, |0>}: outcome 1 -> row offset 0, outcome 0 -> 1.
CMatrix ancilla_block(const CMatrix& u, int anc_out, int anc_in) {
    const int ro = anc_out == 1 ? 0 : 1;
    const int ci = anc_in == 1 ? 0 : 1;
    CMatrix k(2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) k(i, j) = u(2 * i + ro, 2 * j + ci);
    return k;
}

}  // namespace

void ModelParams::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("ModelParams: gamma must be >= 0");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("ModelParams: dt must be > 0");
    if (n_collisions < 1) throw std::invalid_argument("ModelParams: n_collisions must be >= 1");
    if (!std::isfinite(omega)) throw std::invalid_argument("ModelParams: omega must be finite");
    if (std::abs(psi0.norm2() - 1.0) > 1e-12)
        throw std::invalid_argument("ModelParams: psi0 must be normalized within 1e-12");
}

CMatrix build_hamiltonian(const ModelParams& p) {
    p.validate();
    const double g = std::sqrt(p.gamma / p.dt);
    CMatrix h = kron(pauli_x(), CMatrix::identity(2)) * p.omega;
    h += kron(sigma_plus(), anc_lower()) * g;
    h += kron(sigma_minus(), anc_raise()) * g;
    return h;
}

KrausPair exact_kraus(const ModelParams& p) {
    const CMatrix u = unitary_propagator(build_hamiltonian(p), p.dt);
    return {ancilla_block(u, 0, 0), ancilla_block(u, 1, 0)};
}

KrausPair first_order_kraus(const ModelParams& p) {
    p.validate();
    CMatrix k0 = CMatrix::identity(2);
    k0 -= pauli_x() * cplx(0.0, p.omega * p.dt);
    k0 -= excited_projector() * (0.5 * p.gamma * p.dt);
    const CMatrix k1 = sigma_minus() * std::sqrt(p.gamma * p.dt);
    return {k0, k1};
}

CMatrix apply_channel(const CMatrix& rho, const KrausPair& k) {
    if (rho.dim() != 2) throw std::invalid_argument("apply_channel: rho must be 2x2");
    const double herm = rho.hermiticity_defect();
    if (herm > 1e-10) throw DensityMatrixError("not Hermitian", herm);
    const double tr = std::abs(rho.trace() - cplx(1.0));
    if (tr > 1e-10) throw DensityMatrixError("trace != 1", tr);
    const double ev = min_herm_eigenvalue(rho);
    if (ev < -1e-10) throw DensityMatrixError("not positive semidefinite", ev);
    return k.k0 * rho * k.k0.adjoint() + k.k1 * rho * k.k1.adjoint();
}

double completeness_defect(const KrausPair& k) {
    const CMatrix sum = k.k0.adjoint() * k.k0 + k.k1.adjoint() * k.k1;
    return max_abs_diff(sum, CMatrix::identity(sum.dim()));
}

}  // namespace qtbias
