#pragma once

#include "qbirkhoff/complexmat.hpp"

#include <vector>

namespace qb {

// Polynomial over C, coefficients ascending. Trailing coefficients below
// 1e-13 * max|c| are trimmed so degree/valuation queries stay meaningful after
// arithmetic that cancels exactly in infinite precision.
class CPolynomial {
public:
    CPolynomial() {}
    explicit CPolynomial(std::vector<cplx> coeffs);
    static CPolynomial constant(cplx c);
    static CPolynomial monomial(cplx c, std::size_t power);
    static CPolynomial fromRoots(const std::vector<cplx>& roots, cplx lead = 1.0);

    bool isZero() const { return c_.empty(); }
    // degree of the zero polynomial is -1
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    // index of the first significant coefficient; 0 for the zero polynomial
    int valuation() const;

    cplx coeff(std::size_t k) const { return k < c_.size() ? c_[k] : cplx(0.0); }
    cplx leadCoeff() const { return c_.empty() ? cplx(0.0) : c_.back(); }
    const std::vector<cplx>& coeffs() const { return c_; }

    cplx eval(cplx z) const;
    CPolynomial derivative() const;
    // p(s*z): coefficient k scaled by s^k
    CPolynomial scaleArgument(cplx s) const;
    double maxCoeffAbs() const;

    CPolynomial& operator+=(const CPolynomial& rhs);
    CPolynomial& operator-=(const CPolynomial& rhs);
    CPolynomial& operator*=(const CPolynomial& rhs);
    CPolynomial& operator*=(cplx s);

    // All roots (with multiplicity) via Durand-Kerner plus Newton polishing.
    // Deterministic; closed forms for degree <= 2.
    std::vector<cplx> roots() const;

private:
    void trim();
    std::vector<cplx> c_;
};

CPolynomial operator+(CPolynomial lhs, const CPolynomial& rhs);
CPolynomial operator-(CPolynomial lhs, const CPolynomial& rhs);
CPolynomial operator*(CPolynomial lhs, const CPolynomial& rhs);
CPolynomial operator*(cplx s, CPolynomial p);

// Laurent expansion data: f(z) = z^valuation * sum_k coeff[k] z^k (at 0), or
// f(z) = z^degree * sum_k coeff[k] z^-k (at infinity), coeff[0] != 0.
struct LaurentData {
    int leadExponent = 0;
    std::vector<cplx> coeff;
};

// Ratio of polynomials. The stored pair is never reduced symbolically;
// queries that would be corrupted by common factors deflate shared roots
// numerically (Laurent expansion) or filter by magnitude probes (poles).
class CRationalFunction {
public:
    CRationalFunction() : num_(CPolynomial::constant(0.0)), den_(CPolynomial::constant(1.0)) {}
    CRationalFunction(CPolynomial num, CPolynomial den);
    static CRationalFunction constant(cplx c);
    static CRationalFunction fromPoly(CPolynomial p);

    const CPolynomial& num() const { return num_; }
    const CPolynomial& den() const { return den_; }
    bool isZero() const { return num_.isZero(); }

    cplx eval(cplx z) const;

    // ord_0(f) = val(num) - val(den); exact through cancellations because it
    // only uses valuations.
    int valuationAt0() const;
    // ord_inf growth: deg(num) - deg(den)
    int degreeAtInf() const;

    // Laurent expansion at 0 to `terms` coefficients past the lead.
    LaurentData laurentAt0(std::size_t terms) const;
    // Laurent expansion at infinity (series in 1/z).
    LaurentData laurentAtInf(std::size_t terms) const;

    CRationalFunction& operator+=(const CRationalFunction& rhs);
    CRationalFunction& operator*=(const CRationalFunction& rhs);
    CRationalFunction& operator*=(cplx s);
    CRationalFunction reciprocal() const;
    // f(s*z)
    CRationalFunction scaleArgument(cplx s) const;
    CRationalFunction derivative() const;

    // Genuine poles in C (den roots where the function actually blows up;
    // removable den roots are filtered by a magnitude probe). Multiplicities
    // are not reported; duplicates within relative tol are merged.
    std::vector<cplx> poles() const;

private:
    CPolynomial num_, den_;
};

CRationalFunction operator+(CRationalFunction lhs, const CRationalFunction& rhs);
CRationalFunction operator*(CRationalFunction lhs, const CRationalFunction& rhs);
CRationalFunction operator*(cplx s, CRationalFunction f);

// nu x nu matrix of rational functions (entrywise representation).
class RationalMatrix {
public:
    RationalMatrix() : n_(0) {}
    explicit RationalMatrix(std::size_t n)
        : n_(n), e_(n * n) {}

    std::size_t size() const { return n_; }
    CRationalFunction& operator()(std::size_t i, std::size_t j) { return e_[i * n_ + j]; }
    const CRationalFunction& operator()(std::size_t i, std::size_t j) const { return e_[i * n_ + j]; }

    static RationalMatrix identity(std::size_t n);
    static RationalMatrix fromConstant(const CMatrix& m);

    CMatrix eval(cplx z) const;
    RationalMatrix scaleArgument(cplx s) const;
    RationalMatrix operator*(const RationalMatrix& rhs) const;
    RationalMatrix operator+(const RationalMatrix& rhs) const;
    RationalMatrix scalarMul(const CRationalFunction& f) const;

    CRationalFunction det() const;
    // Inverse via adjugate/det (fine at nu <= 4).
    RationalMatrix inverse() const;

    // Union of entrywise genuine poles, deduplicated.
    std::vector<cplx> poles() const;

private:
    std::size_t n_;
    std::vector<CRationalFunction> e_;
};

// Merge points closer than relTol * max(1,|p|) into one representative.
std::vector<cplx> dedupPoints(std::vector<cplx> pts, double relTol = 1e-8);

} // namespace qb
