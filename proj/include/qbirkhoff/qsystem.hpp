#pragma once

#include "qbirkhoff/polynomial.hpp"
#include "qbirkhoff/qcontext.hpp"
#include "qbirkhoff/theta.hpp"

#include <vector>

namespace qb {

enum class Side { Origin, Infinity };

// Local data of sigma_q Y = R(z) A(z) Y extracted by analyze_system:
// R scalar rational with ord_0 R = mu0 (lead coefficient r0) and growth
// z^muInf (lead rInf) at infinity; A analytic and invertible at 0 and at
// infinity. Fuchsian checks and the non-resonance hypothesis (eigenvalues of
// A(0), resp. A(inf), pairwise distinct modulo q^Z) run here.
struct SystemData {
    int mu0 = 0, muInf = 0;
    cplx r0 = 1.0, rInf = 1.0;
    CMatrix A0, AInf;
    std::vector<cplx> eigA0, eigAInf;
    std::vector<cplx> polesRA;  // poles of R*A in C^*
    std::vector<cplx> detZeros; // zeros of det(R*A) in C^*
    double workingRadius0 = 1.0;
    double workingRadiusInf = 1.0;
};

class RationalQSystem {
public:
    RationalQSystem(QContext ctx, CRationalFunction R, RationalMatrix A);

    // sigma_p Y = Rp(z) Ap(z) Y with p = 1/q is converted on ingestion:
    // sigma_q Y = [Rp(qz) Ap(qz)]^{-1} Y.
    static RationalQSystem fromSigmaP(QContext ctx, CRationalFunction Rp,
                                      RationalMatrix Ap);

    const QContext& ctx() const { return ctx_; }
    const CRationalFunction& R() const { return R_; }
    const RationalMatrix& A() const { return A_; }
    std::size_t nu() const { return A_.size(); }
    const SystemData& data() const { return data_; }

    CMatrix evalRA(cplx z) const;

private:
    void analyze();
    QContext ctx_;
    CRationalFunction R_;
    RationalMatrix A_;
    SystemData data_;
};

// Local solution Y = Hhat(z) Lambda_{q,B}(z) Theta(z)^mu with Hhat(0) = I
// (origin; B = r0 A(0)) or the mirrored expansion in 1/z at infinity
// (B = rInf A(inf)). H holds the series coefficients of Hhat.
struct LocalSolution {
    Side side = Side::Origin;
    std::vector<CMatrix> H;
    CharacterPart character;
    int thetaPower = 0;
    double seriesRadius = 1.0; // |z| <= this (origin) or |z| >= this (infinity)
    SpiralSet poleRegistry;    // eval_solution refuses points on these spirals
    double tolerance = 1e-14;
};

// Solve the term recursion q^{+-k} H_k B - B H_k = sum_{j>=1} M_j H_{k-j}
// with adaptive truncation (three consecutive coefficients contributing
// below tol/10 at the working radius). NoConvergence after maxTerms.
LocalSolution local_series(const RationalQSystem& sys, Side side,
                           double tol = 1e-14, std::size_t maxTerms = 500);

// Evaluate Y(z) anywhere in C^* off the pole registry; outside the series
// radius the value is continued with the q-propagation cocycle
//   Y(z) = [RA](z/q) ... [RA](z/q^n) Y(z/q^n)            (origin side)
//   Y(z) = [RA](z)^{-1} ... [RA](q^{n-1}z)^{-1} Y(q^n z) (infinity side).
ScaledCMatrix eval_solution(const RationalQSystem& sys, const LocalSolution& sol,
                            cplx z, double poleTol = 1e-8);

// Hhat(z) = Y(z) Theta(z)^{-mu} Lambda(z)^{-1}: the series part continued
// beyond its disc of convergence through the solution itself.
CMatrix series_part_eval(const RationalQSystem& sys, const LocalSolution& sol,
                         cplx z, double poleTol = 1e-8);

} // namespace qb
