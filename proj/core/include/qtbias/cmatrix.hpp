// cmatrix.hpp — small dense complex matrices (dim 2 or 4) and qubit states.
//
// Basis conventions used throughout:
//   sensor qubit      {|e>, |g>}  (index 0 = excited)
//   ancilla qubit     {|1>, |0>}  (index 0 = clicked/excited, 1 = ground)
//   joint 4-dim space {|e,1>, |e,0>, |g,1>, |g,0>}, i.e. kron(sensor, ancilla).

#pragma once

#include <array>
#include <complex>
#include <cstddef>

namespace qtbias {

using cplx = std::complex<double>;

class CMatrix {
public:
    CMatrix() = default;
    explicit CMatrix(int dim) : dim_(dim) {}

    static CMatrix zero(int dim) { return CMatrix(dim); }
    static CMatrix identity(int dim) {
        CMatrix m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }

    int dim() const { return dim_; }

    cplx& operator()(int r, int c) { return a_[static_cast<std::size_t>(r * dim_ + c)]; }
    const cplx& operator()(int r, int c) const {
        return a_[static_cast<std::size_t>(r * dim_ + c)];
    }

    CMatrix adjoint() const;
    cplx trace() const;

    // Largest entry modulus.
    double max_abs() const;
    // max |M - M†| over entries.
    double hermiticity_defect() const;

    CMatrix& operator+=(const CMatrix& o);
    CMatrix& operator-=(const CMatrix& o);
    CMatrix& operator*=(cplx z);

    friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
    friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
    friend CMatrix operator*(CMatrix a, cplx z) { return a *= z; }
    friend CMatrix operator*(cplx z, CMatrix a) { return a *= z; }
    friend CMatrix operator*(CMatrix a, double x) { return a *= cplx(x, 0.0); }
    friend CMatrix operator*(double x, CMatrix a) { return a *= cplx(x, 0.0); }
    friend CMatrix operator*(const CMatrix& a, const CMatrix& b);

private:
    int dim_ = 0;
    std::array<cplx, 16> a_{};  // row-major, entries beyond dim_*dim_ unused
};

// Entrywise max modulus of (a - b); dims must agree.
double max_abs_diff(const CMatrix& a, const CMatrix& b);

// Kronecker product of two 2x2 matrices; second factor is the fast index.
CMatrix kron(const CMatrix& a, const CMatrix& b);

// Sensor-qubit operators in the {|e>, |g>} basis.
CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
CMatrix sigma_plus();        // |e><g|
CMatrix sigma_minus();       // |g><e|
CMatrix excited_projector(); // |e><e| = sigma_plus * sigma_minus

// Unnormalized 2-component sensor state in the {|e>, |g>} basis.
struct PureState {
    cplx amp[2]{};

    static PureState ground() { return PureState{{cplx(0.0), cplx(1.0)}}; }
    static PureState excited() { return PureState{{cplx(1.0), cplx(0.0)}}; }
    static PureState plus();  // (|e> + |g>)/sqrt(2)

    double norm2() const;  // squared norm
    PureState normalized() const;
};

// m must be 2x2.
PureState apply(const CMatrix& m, const PureState& psi);

// |psi><psi| as a 2x2 matrix (no normalization).
CMatrix outer(const PureState& psi);

}  // namespace qtbias
