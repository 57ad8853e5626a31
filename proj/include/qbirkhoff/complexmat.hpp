#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace qb {

using cplx = std::complex<double>;

// Dense complex matrix, row-major. Sized for the small (nu <= 4, and nu^2 for
// Kronecker systems) problems this library deals with; all solvers are direct.
class CMatrix {
public:
    CMatrix() : rows_(0), cols_(0) {}
    CMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, cplx(0.0, 0.0)) {}
    CMatrix(std::size_t rows, std::size_t cols, std::initializer_list<cplx> vals);

    static CMatrix identity(std::size_t n);
    static CMatrix diagonal(const std::vector<cplx>& d);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool isSquare() const { return rows_ == cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    CMatrix& operator+=(const CMatrix& rhs);
    CMatrix& operator-=(const CMatrix& rhs);
    CMatrix& operator*=(cplx s);

    CMatrix transpose() const;

    double frobeniusNorm() const;
    double maxAbs() const;

    std::vector<cplx> diagonalVector() const;
    cplx trace() const;

    // LU with partial pivoting underneath. `solve` handles AX = B.
    // Throws SingularInput when a pivot collapses relative to the matrix scale.
    CMatrix solve(const CMatrix& rhs) const;
    CMatrix inverse() const;
    cplx det() const;

    // ||A||_F * ||A^{-1}||_F; +inf when singular.
    double conditionEstimate() const;

    bool sameShape(const CMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<cplx> a_;
};

CMatrix operator+(CMatrix lhs, const CMatrix& rhs);
CMatrix operator-(CMatrix lhs, const CMatrix& rhs);
CMatrix operator*(const CMatrix& lhs, const CMatrix& rhs);
CMatrix operator*(cplx s, CMatrix m);
CMatrix operator*(CMatrix m, cplx s);

// max_ij |a_ij - b_ij|
double maxAbsDiff(const CMatrix& a, const CMatrix& b);

// ||a-b||_F / max(||a||_F, ||b||_F, floor); the relative residual used by all
// verification routines.
double relDiff(const CMatrix& a, const CMatrix& b, double floor = 1e-300);

// Matrix with a factored-out real log-scale: value = m * exp(logScale).
// Keeps propagation products and theta-character products representable when
// the raw magnitudes leave double range.
struct ScaledCMatrix {
    CMatrix m;
    double logScale = 0.0;

    // Pull the magnitude of m into logScale so maxAbs(m) lands near 1.
    void normalize();
    // Collapse to a plain matrix; throws Overflow if exp(logScale) cannot be
    // represented.
    CMatrix value() const;
};

} // namespace qb
