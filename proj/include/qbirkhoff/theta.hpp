#pragma once

#include "qbirkhoff/complexmat.hpp"
#include "qbirkhoff/jordan.hpp"
#include "qbirkhoff/qcontext.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace qb {

// Complex value with a factored-out real log-scale: value = m * exp(logs).
// All theta-type quantities are computed in this form so arguments far from
// the fundamental annulus can't overflow doubles.
struct ScaledComplex {
    cplx m = 0.0;
    double logs = 0.0;

    static ScaledComplex from(cplx v);
    cplx value() const; // throws Overflow outside double range
    double logAbs() const;
    bool isZero() const { return m == cplx(0.0); }

    ScaledComplex& operator*=(const ScaledComplex& rhs);
    ScaledComplex& operator*=(cplx s);
    ScaledComplex inverse() const;
    ScaledComplex powInt(long k) const;
    void normalize();
};
ScaledComplex operator*(ScaledComplex a, const ScaledComplex& b);
ScaledComplex operator/(ScaledComplex a, const ScaledComplex& b);

// ---- spirals -------------------------------------------------------------

// Discrete q-spiral {base * q^k : k in Z}, optionally with a restricted
// exponent range.
struct Spiral {
    cplx base;
    long minExp = std::numeric_limits<long>::min();
    long maxExp = std::numeric_limits<long>::max();
};

struct SpiralHit {
    double exponent = 0.0; // real spiral coordinate of z along base*q^R
    long nearestIndex = 0; // nearest integer lattice point
    double distance = 0.0; // |log(z) - log(base*q^n)| / |log q|, lattice-reduced
};

// Locate z relative to the spiral base*q^Z. Distance is measured in
// logarithmic spiral coordinates (units of one q-step), minimized over the
// 2*pi*i ambiguity of the complex log.
SpiralHit spiral_locate(const QContext& ctx, cplx base, cplx z);

struct SpiralMatch {
    std::size_t spiralIndex;
    SpiralHit hit;
};

class SpiralSet {
public:
    SpiralSet() = default;
    void add(cplx base);
    void add(const Spiral& s);
    void merge(const SpiralSet& other);
    const std::vector<Spiral>& spirals() const { return s_; }
    bool empty() const { return s_.empty(); }

    // Nearest spiral containing z within tol (exponent-range aware);
    // nullopt when none.
    std::optional<SpiralMatch> contains(const QContext& ctx, cplx z,
                                        double tol = 1e-8) const;
    // Distance (spiral coordinates) to the nearest in-range lattice point
    // over all member spirals; +inf for an empty set.
    double distance(const QContext& ctx, cplx z) const;

private:
    std::vector<Spiral> s_;
};

// ---- theta and characters -------------------------------------------------

// Jacobi theta Theta_q(z) = sum_{n in Z} q^{-n(n+1)/2} z^n, computed by
// argument reduction to the fundamental annulus plus the truncated bilateral
// series. Functional equation: Theta(qz) = z*Theta(z); zeros exactly on -q^Z.
ScaledComplex theta_scaled(const QContext& ctx, cplx z, double tol = 1e-14);
cplx theta_eval(const QContext& ctx, cplx z, double tol = 1e-14);

// Same value by the triple product (independent path, used for cross-checks):
// Theta(z) = prod_{n>=0} (1-q^{-n-1})(1+q^{-n-1}z)(1+q^{-n}/z).
ScaledComplex theta_product_scaled(const QContext& ctx, cplx z, double tol = 1e-14);

// (x; 1/q)_infinity = prod_{n>=0} (1 - x q^{-n})
ScaledComplex qpochhammer_scaled(const QContext& ctx, cplx x, double tol = 1e-14);
cplx qpochhammer(const QContext& ctx, cplx x, double tol = 1e-14);

// Cached theta constant prod_{n>=0}(1 - q^{-n-1}).
cplx theta_constant(const QContext& ctx, double tol = 1e-14);

// Scalar q-character Lambda_{q,a} = Theta(z)/Theta(z/a):
// Lambda(qz) = a*Lambda(z), poles on -a*q^Z, zeros on -q^Z.
// Throws OnPoleSpiral within poleTol of a pole (spiral coordinates).
ScaledComplex lambda_char_scaled(const QContext& ctx, cplx a, cplx z,
                                 double tol = 1e-14, double poleTol = 1e-8);
cplx lambda_char_eval(const QContext& ctx, cplx a, cplx z,
                      double tol = 1e-14, double poleTol = 1e-8);

// l_q = z * Theta'(z) / Theta(z); satisfies l_q(qz) = l_q(z) + 1.
// Poles on -q^Z (OnPoleSpiral).
cplx lq_eval(const QContext& ctx, cplx z, double tol = 1e-14,
             double poleTol = 1e-8);

// Matrix q-character Lambda_{q,B} built from the multiplicative Jordan form
// B = P diag(d) U P^{-1}:
//   Lambda_{q,B}(z) = P diag(Lambda_{q,d_i}(z)) exp(log(U) l_q(z)) P^{-1}.
// Satisfies Lambda(qz) = B Lambda(z) = Lambda(z) B. Independent of the
// Jordan basis chosen (D and U commute with every block-scalar factor).
struct CharacterPart {
    JordanData jordan;
    CMatrix logU; // unipotent_log(jordan.U); zero matrix when U == I
    bool trivialU = true;
};

CharacterPart make_character(const CMatrix& B, double clusterTol = 1e-8);

// Pole spirals of Lambda_{q,B}: bases -d_i; the -q^Z theta-zero spiral is
// added when the unipotent part is nontrivial (l_q blows up there).
SpiralSet character_pole_spirals(const CharacterPart& ch);

ScaledCMatrix matrix_char_eval(const QContext& ctx, const CharacterPart& ch,
                               cplx z, double tol = 1e-14, double poleTol = 1e-8);

} // namespace qb
