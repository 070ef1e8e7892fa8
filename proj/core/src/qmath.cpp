#include "qtbias/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qtbias/errors.hpp"

namespace qtbias {

namespace {

// One two-sided Jacobi rotation in the (p, q) plane, chosen to annihilate
// a_pq. Updates A in place and accumulates the rotation into V.
void jacobi_rotate(CMatrix& a, CMatrix& v, int p, int q) {
    const cplx apq = a(p, q);
    const double mag = std::abs(apq);
    if (mag == 0.0) return;
    const double app = a(p, p).real();
    const double aqq = a(q, q).real();
    const double theta = 0.5 * std::atan2(2.0 * mag, app - aqq);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const cplx phase = apq / mag;  // e^{i arg(a_pq)}

    const int n = a.dim();
    // Column update: B = A·U with U = [[c, -s·phase], [s·conj(phase), c]].
    for (int i = 0; i < n; ++i) {
        const cplx aip = a(i, p);
        const cplx aiq = a(i, q);
        a(i, p) = c * aip + s * std::conj(phase) * aiq;
        a(i, q) = -s * phase * aip + c * aiq;
    }
    // Row update: A' = U†·B.
    for (int j = 0; j < n; ++j) {
        const cplx apj = a(p, j);
        const cplx aqj = a(q, j);
        a(p, j) = c * apj + s * phase * aqj;
        a(q, j) = -s * std::conj(phase) * apj + c * aqj;
    }
    // Accumulate eigenvectors: V = V·U.
    for (int i = 0; i < n; ++i) {
        const cplx vip = v(i, p);
        const cplx viq = v(i, q);
        v(i, p) = c * vip + s * std::conj(phase) * viq;
        v(i, q) = -s * phase * vip + c * viq;
    }
    // Enforce exact symmetry of the rotated pair.
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    a(p, p) = cplx(a(p, p).real(), 0.0);
    a(q, q) = cplx(a(q, q).real(), 0.0);
}

double offdiag_max(const CMatrix& a) {
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j)
            if (i != j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

HermEig decompose(const CMatrix& m) {
    const int n = m.dim();
    // Work on the exactly Hermitian part; the defect was already checked.
    CMatrix a(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
    CMatrix v = CMatrix::identity(n);

    const double scale = std::max(a.max_abs(), 1e-300);
    const double tol = 1e-16 * scale;
    for (int sweep = 0; sweep < 64 && offdiag_max(a) > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q)
                if (std::abs(a(p, q)) > tol) jacobi_rotate(a, v, p, q);
    }

    // Sort ascending, permuting eigenvector columns along.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });

    HermEig out;
    out.eigenvalues.resize(static_cast<std::size_t>(n));
    out.eigenvectors = CMatrix(n);
    for (int k = 0; k < n; ++k) {
        const int src = order[static_cast<std::size_t>(k)];
        out.eigenvalues[static_cast<std::size_t>(k)] = a(src, src).real();
        // Fix the column phase: largest-modulus component becomes real >= 0.
        int imax = 0;
        double best = -1.0;
        for (int i = 0; i < n; ++i) {
            const double mag = std::abs(v(i, src));
            if (mag > best) {
                best = mag;
                imax = i;
            }
        }
        cplx rot = 1.0;
        if (best > 0.0) rot = std::conj(v(imax, src)) / best;
        for (int i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, src) * rot;
    }
    return out;
}

CMatrix rebuild(const HermEig& eig, const std::vector<double>& vals) {
    const int n = eig.eigenvectors.dim();
    CMatrix r(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx acc = 0.0;
            for (int k = 0; k < n; ++k)
                acc += eig.eigenvectors(i, k) * vals[static_cast<std::size_t>(k)] *
                       std::conj(eig.eigenvectors(j, k));
            r(i, j) = acc;
        }
    // Round-trip through the spectral form is Hermitian by construction; pin
    // it exactly so downstream Hermiticity checks never see accumulated dirt.
    for (int i = 0; i < n; ++i) {
        r(i, i) = cplx(r(i, i).real(), 0.0);
        for (int j = i + 1; j < n; ++j) {
            const cplx sym = 0.5 * (r(i, j) + std::conj(r(j, i)));
            r(i, j) = sym;
            r(j, i) = std::conj(sym);
        }
    }
    return r;
}

}  // namespace

HermEig herm_eig(const CMatrix& m, double herm_tol) {
    if (m.dim() != 2 && m.dim() != 4)
        throw std::invalid_argument("herm_eig: supported dimensions are 2 and 4");
    const double defect = m.hermiticity_defect();
    if (defect > herm_tol) throw NonHermitianError(defect);
    return decompose(m);
}

CMatrix unitary_propagator(const CMatrix& h, double t) {
    if (!std::isfinite(t)) throw std::invalid_argument("unitary_propagator: t must be finite");
    const HermEig eig = herm_eig(h);
    const int n = h.dim();
    CMatrix u(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx acc = 0.0;
            for (int k = 0; k < n; ++k) {
                const double phi = -eig.eigenvalues[static_cast<std::size_t>(k)] * t;
                acc += eig.eigenvectors(i, k) * std::polar(1.0, phi) *
                       std::conj(eig.eigenvectors(j, k));
            }
            u(i, j) = acc;
        }
    return u;
}

CMatrix psd_sqrt(const CMatrix& m) {
    const HermEig eig = herm_eig(m, 1e-10);
    std::vector<double> roots(eig.eigenvalues.size());
    for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k) {
        const double ev = eig.eigenvalues[k];
        if (ev < kPsdClampFloor) throw IndefiniteMatrixError(ev);
        roots[k] = ev > 0.0 ? std::sqrt(ev) : 0.0;
    }
    return rebuild(eig, roots);
}

CMatrix psd_inverse(const CMatrix& m) {
    const HermEig eig = herm_eig(m, 1e-10);
    std::vector<double> inv(eig.eigenvalues.size());
    for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k) {
        const double ev = eig.eigenvalues[k];
        if (ev < kInvertFloor) throw SingularMatrixError(ev);
        inv[k] = 1.0 / ev;
    }
    return rebuild(eig, inv);
}

double min_herm_eigenvalue(const CMatrix& m) {
    const HermEig eig = herm_eig(m, 1e-10);
    return eig.eigenvalues.front();
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
    const HermEig eig = herm_eig(a - b, 1e-9);
    double sum = 0.0;
    for (double ev : eig.eigenvalues) sum += std::abs(ev);
    return 0.5 * sum;
}

}  // namespace qtbias
