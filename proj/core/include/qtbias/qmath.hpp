// qmath.hpp — Hermitian eigendecomposition, unitary propagators, and
// positive-semidefinite square roots / inverses for 2x2 and 4x4 matrices.

#pragma once

#include <vector>

#include "qtbias/cmatrix.hpp"

namespace qtbias {

struct HermEig {
    std::vector<double> eigenvalues;  // ascending
    CMatrix eigenvectors;             // columns, unitary
};

// Tolerances fixed by the module contract.
inline constexpr double kHermTol = 1e-12;       // max |M - M†| accepted as Hermitian
inline constexpr double kPsdClampFloor = -1e-10;  // eigenvalues in [floor, 0) clamp to 0
inline constexpr double kInvertFloor = 1e-12;   // smallest invertible eigenvalue

// Cyclic complex Jacobi; throws NonHermitianError above tolerance.
// Eigenvector phases are fixed (largest-modulus component real, >= 0) so the
// decomposition is deterministic.
HermEig herm_eig(const CMatrix& m, double herm_tol = kHermTol);

// exp(-i h t) through the eigendecomposition of Hermitian h.
CMatrix unitary_propagator(const CMatrix& h, double t);

// Hermitian PSD square root; eigenvalues in [kPsdClampFloor, 0) are clamped
// to zero, anything lower throws IndefiniteMatrixError.
CMatrix psd_sqrt(const CMatrix& m);

// Inverse of a positive-definite Hermitian matrix; eigenvalues below
// kInvertFloor throw SingularMatrixError.
CMatrix psd_inverse(const CMatrix& m);

// Smallest eigenvalue of a Hermitian matrix.
double min_herm_eigenvalue(const CMatrix& m);

// (1/2)·sum |eig(a - b)| for Hermitian a, b.
double trace_distance(const CMatrix& a, const CMatrix& b);

}  // namespace qtbias
