#include "qtbias/cmatrix.hpp"

#include <cmath>
#include <stdexcept>

namespace qtbias {

CMatrix CMatrix::adjoint() const {
    CMatrix r(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r(i, j) = std::conj((*this)(j, i));
    return r;
}

cplx CMatrix::trace() const {
    cplx t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double CMatrix::max_abs() const {
    double m = 0.0;
    for (int i = 0; i < dim_ * dim_; ++i) m = std::max(m, std::abs(a_[static_cast<std::size_t>(i)]));
    return m;
}

double CMatrix::hermiticity_defect() const {
    double m = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            m = std::max(m, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return m;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
    if (dim_ != o.dim_) throw std::invalid_argument("CMatrix: dimension mismatch");
    for (int i = 0; i < dim_ * dim_; ++i) a_[static_cast<std::size_t>(i)] += o.a_[static_cast<std::size_t>(i)];
    return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
    if (dim_ != o.dim_) throw std::invalid_argument("CMatrix: dimension mismatch");
    for (int i = 0; i < dim_ * dim_; ++i) a_[static_cast<std::size_t>(i)] -= o.a_[static_cast<std::size_t>(i)];
    return *this;
}

CMatrix& CMatrix::operator*=(cplx z) {
    for (int i = 0; i < dim_ * dim_; ++i) a_[static_cast<std::size_t>(i)] *= z;
    return *this;
}

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("CMatrix: dimension mismatch");
    const int n = a.dim();
    CMatrix r(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx(0.0)) continue;
            for (int j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("max_abs_diff: dimension mismatch");
    double m = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    if (a.dim() != 2 || b.dim() != 2) throw std::invalid_argument("kron: expects 2x2 factors");
    CMatrix r(4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) r(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
    return r;
}

CMatrix pauli_x() {
    CMatrix m(2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    return m;
}

CMatrix pauli_y() {
    CMatrix m(2);
    m(0, 1) = cplx(0.0, -1.0);
    m(1, 0) = cplx(0.0, 1.0);
    return m;
}

CMatrix pauli_z() {
    CMatrix m(2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return m;
}

CMatrix sigma_plus() {
    CMatrix m(2);
    m(0, 1) = 1.0;
    return m;
}

CMatrix sigma_minus() {
    CMatrix m(2);
    m(1, 0) = 1.0;
    return m;
}

CMatrix excited_projector() {
    CMatrix m(2);
    m(0, 0) = 1.0;
    return m;
}

PureState PureState::plus() {
    const double r = 1.0 / std::sqrt(2.0);
    return PureState{{cplx(r), cplx(r)}};
}

double PureState::norm2() const {
    return std::norm(amp[0]) + std::norm(amp[1]);
}

PureState PureState::normalized() const {
    const double n2 = norm2();
    if (n2 <= 0.0) throw std::invalid_argument("PureState: cannot normalize zero state");
    const double inv = 1.0 / std::sqrt(n2);
    return PureState{{amp[0] * inv, amp[1] * inv}};
}

PureState apply(const CMatrix& m, const PureState& psi) {
    if (m.dim() != 2) throw std::invalid_argument("apply: expects a 2x2 matrix");
    return PureState{{m(0, 0) * psi.amp[0] + m(0, 1) * psi.amp[1],
                      m(1, 0) * psi.amp[0] + m(1, 1) * psi.amp[1]}};
}

CMatrix outer(const PureState& psi) {
    CMatrix r(2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = psi.amp[i] * std::conj(psi.amp[j]);
    return r;
}

}  // namespace qtbias
