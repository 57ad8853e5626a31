#pragma once

#include "qbirkhoff/birkhoff.hpp"

#include <memory>
#include <vector>

namespace qb {

// One member of the degree-two family
//   sigma_p Y = (z-1)(z-t) (I + (p-1) z calA(z,t)) Y
//             = (t B0 + A1(t) z + C z^2) Y =: A(z,t) Y,   p = 1/q,
// with calA(z,t) = calA0/z + calA1/(z-1) + calAt/(z-t), together with the
// stripped system  sigma_p Y = (I + (p-1) z calA(z,t)) Y  whose connection
// matrix behaves well under confluence. Both are ingested in sigma_q form:
//   full:     sigma_q Y = 1/((qz-1)(qz-t)) * N(qz)^{-1} Y,
//   stripped: sigma_q Y = N(qz)^{-1} Y,        N(z) = I + (p-1) z calA(z,t).
// Hypotheses validated here: C^2-shape residue input, A2 = calA0+calA1+calAt
// diagonal, B0 = I + (p-1) calA0 diagonalizable, t*theta_i (resp. the
// eigenvalues of C) equal or distinct modulo q^Z, and the degree-4
// determinant factorization with nonvanishing roots.
struct JimboSakaiInstance {
    QContext ctx;
    cplx t;
    CMatrix calA0, calA1, calAt;
    CMatrix A2;        // calA0 + calA1 + calAt, must be diagonal
    cplx kappa1, kappa2;
    CMatrix B0;        // I + (p-1) calA0
    CMatrix C;         // I + (p-1) A2
    CMatrix A1;        // derived z-coefficient of A(z,t); never an input
    std::vector<cplx> thetaEig; // eigenvalues of B0
    std::vector<cplx> cEig;     // eigenvalues of C
    std::vector<cplx> detRoots; // roots of det A(z,t), sorted by (|.|, arg)
    std::unique_ptr<RationalQSystem> sysP; // stripped system
    std::unique_ptr<RationalQSystem> sysQ; // full system
    ConnectionData connP;
    ConnectionData connQ;

    // spirals both connection matrices and the comparison factors live on
    SpiralSet probeAvoidSet() const;
};

JimboSakaiInstance build_jimbo_sakai(const QContext& ctx, const CMatrix& calA0,
                                     const CMatrix& calA1, const CMatrix& calAt,
                                     cplx t, double tol = 1e-14);

// ---- scalar building blocks -------------------------------------------------
// The two normalized solutions of sigma_p y = (z - alpha) y, in closed form:
//   y0   = Theta(z) / ((z/alpha; p)_inf * Theta(-alpha z)),
//   yinf = (alpha/(qz); p)_inf / Theta(qz),
// and their connection yinf^{-1} y0 = C_q Theta(z)Theta(qz) /
// (Theta(-qz/alpha) Theta(-alpha z)). Requires alpha off -q^Z.
ScaledComplex scalar_y0(const QContext& ctx, cplx alpha, cplx z,
                        double tol = 1e-14, double poleTol = 1e-8);
ScaledComplex scalar_yinf(const QContext& ctx, cplx alpha, cplx z,
                          double tol = 1e-14, double poleTol = 1e-8);
ScaledComplex scalar_connection(const QContext& ctx, cplx alpha, cplx z,
                                double tol = 1e-14, double poleTol = 1e-8);

// ---- the connection-matrix comparison ---------------------------------------

// Perturbations of the comparison identity, used as negative controls: each
// one must push the residual far from zero.
enum class ComparisonCorruption {
    None,
    DropQPower,          // omit the q prefactor
    AltQPowerMinus3,     // replace the q prefactor by q^{-3}
    DropA2Square,        // omit the C^2 factor
    DropLambdaB0Inverse, // omit Lambda_{q,B0^{-1}}^{-1}
    DropLambdaTB0,       // omit Lambda_{q,t^{-1}B0^{-1}}
    ThetaNumOnce,        // Theta(qz)^2 -> Theta(qz)
    ThetaDenWrongArg,    // Theta(-qz/t) -> Theta(-z/t)
};

// max over probes of the relative deviation in
//   Q(z) = q * C_q^2 * Theta(qz)^2 / (Theta(-qz) Theta(-qz/t))
//          * C^2 * P(z) * Lambda_{q,B0^{-1}}^{-1} * Lambda_{q,t^{-1}B0^{-1}},
// Q resp. P the connection matrices of the full resp. stripped system.
double comparison_residual(const JimboSakaiInstance& inst,
                         const std::vector<cplx>& zProbes,
                         ComparisonCorruption corruption = ComparisonCorruption::None,
                         double poleTol = 1e-8);

// max over probes of the relative deviation in the series-part identity
//   F_inf^{-1} F_0 = C_q^2 / (Theta(-qz) Theta(-qz/t)) * H_inf^{-1} H_0
// (F from the full system, H from the stripped one).
double series_ratio_residual(const JimboSakaiInstance& inst,
                           const std::vector<cplx>& zProbes,
                           double poleTol = 1e-8);

// ---- pseudo-constancy criterion ----------------------------------------------

// Instances at t and qt with the same residue matrices. qResidual measures
// pseudo-constancy of the full connection matrix Q directly; pResidual
// measures the criterion  P(z,qt) = -t^2 P(z,t) B0. The two booleans must
// agree: that equivalence is the content of the criterion.
struct CriterionReport {
    double qResidual = 0.0;
    double pResidual = 0.0;
    bool qPseudoConstant = false;
    bool pCriterion = false;
    double tol = 1e-6;
};

CriterionReport criterion_check(const QContext& ctx, const CMatrix& calA0,
                                const CMatrix& calA1, const CMatrix& calAt,
                                cplx t, const std::vector<cplx>& zProbes,
                                double tol = 1e-6);

} // namespace qb
