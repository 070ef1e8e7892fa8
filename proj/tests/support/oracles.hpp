// oracles.hpp — independent reference computations used only by tests.
// These deliberately avoid the library's eigendecomposition-based code paths
// so that each check pits two unrelated routes against each other.

#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "qtbias/bias.hpp"
#include "qtbias/cmatrix.hpp"
#include "qtbias/rng.hpp"

namespace qtbias::test {

// Matrix exponential by scaling-and-squaring with a Taylor core.
CMatrix expm_taylor(const CMatrix& m);

// exp(-i h t) via expm_taylor (no eigendecomposition involved).
CMatrix propagator_oracle(const CMatrix& h, double t);

// Real eigenvalues of a Hermitian matrix via its characteristic polynomial:
// Faddeev-LeVerrier coefficients + Durand-Kerner root finding.  Ascending.
std::vector<double> charpoly_eigenvalues(const CMatrix& m);

// Closed-form square root of a 2x2 PSD Hermitian matrix:
// sqrt(M) = (M + sqrt(det) 1) / sqrt(tr + 2 sqrt(det)).
CMatrix sqrt2x2_psd(const CMatrix& m);

// Closed-form 2x2 inverse.
CMatrix inv2x2(const CMatrix& m);

// Step-by-step re-implementation of the dressed-map recursion using the
// closed-form 2x2 square root and inverse above.
struct RecursionOracle {
    std::vector<CMatrix> norm_ops;  // index n = 0..N (normalizer after collision n)
    std::vector<CMatrix> k0, k1;    // dressed pairs, collision order
};
RecursionOracle tilted_recursion_oracle(const std::vector<KrausPair>& pairs, double s,
                                        const std::vector<double>& b);

// Raw trajectory probability by direct operator products (no stepwise
// renormalization): ||K_{m_N} ... K_{m_1} psi||^2.
double raw_trajectory_probability(const std::vector<KrausPair>& pairs, const Bits& m,
                                  const PureState& psi0);

// Two-level Richardson extrapolation of a central difference (steps
// delta, delta/2, delta/4); error O(delta^6).
double richardson_derivative(const std::function<double(double)>& f, double x, double delta);

// Largest singular value of a 2x2 matrix.
double operator_norm_2x2(const CMatrix& m);

// Kolmogorov-Smirnov statistic of samples against a CDF, and the asymptotic
// p-value Q_KS.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
double ks_pvalue(std::size_t n, double d);

// Deterministic random test data.
CMatrix random_hermitian(RngStream& rng, int dim, double scale = 1.0);
CMatrix random_psd_2x2(RngStream& rng, double scale = 1.0);
CMatrix random_density_2x2(RngStream& rng);
PureState random_state(RngStream& rng);

}  // namespace qtbias::test
