#pragma once

#include "qbirkhoff/complexmat.hpp"

#include <vector>

namespace qb {

// Multiplicative Jordan data of an invertible matrix B:
//   B = P * diag(d) * U * P^{-1},  U unipotent and commuting with diag(d)
// (U is I except on Jordan blocks, where it carries superdiagonal 1/d).
struct JordanData {
    CMatrix P;
    std::vector<cplx> d;
    CMatrix U;
    bool unipotentTrivial = true; // U == I
    // block structure: blockEig[k] / blockSize[k] describe the k-th Jordan
    // block; d repeats blockEig along each block's columns.
    std::vector<cplx> blockEig;
    std::vector<std::size_t> blockSize;
};

// Compute JordanData. Eigenvalues within clusterTol * max(1, max|lambda|) of
// each other are merged into one cluster; near-defective clusters that fail
// to reconstruct B to 1e-10 * ||B|| raise IllConditioned rather than being
// silently merged. Requires |det B| > clusterTol (SingularInput otherwise).
JordanData eigen_jordan(const CMatrix& B, double clusterTol = 1e-8);

// Eigenvalues only (characteristic polynomial roots), no chain construction.
std::vector<cplx> eigenvalues(const CMatrix& B);

// Solve c*X*M - M*X = C for X (Kronecker vectorization + LU, one step of
// iterative refinement). Throws ResonantSpectrum when some c*mu_i - mu_j
// vanishes at relative tolerance resTol (mu = eigenvalues of M).
CMatrix sylvester_shifted(const CMatrix& M, cplx c, const CMatrix& C,
                          double resTol = 1e-12);
// Same with precomputed eigenvalues of M (skips the per-call root find).
CMatrix sylvester_shifted(const CMatrix& M, const std::vector<cplx>& eigM,
                          cplx c, const CMatrix& C, double resTol = 1e-12);

// Solve k*X + X*A - A*X = C (the recursion step of a Frobenius series).
// Throws ResonantSpectrum when some k + mu_j - mu_i vanishes (mu =
// eigenvalues of A).
CMatrix sylvester_frobenius(const CMatrix& A, const std::vector<cplx>& eigA,
                            double k, const CMatrix& C, double resTol = 1e-12);

// log of a unipotent matrix by the terminating Mercator series.
// Throws NotUnipotent if (U-I)^n fails to vanish at 1e-12 * max(1, ||U||).
CMatrix unipotent_log(const CMatrix& U);

// exp by scaling-and-squaring with a Taylor core; exact (terminating) for
// nilpotent input.
CMatrix matrix_exp(const CMatrix& A);

} // namespace qb
