#include "qbirkhoff/qpvi.hpp"

#include "qbirkhoff/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace qb {

namespace {

// "equal or distinct modulo q^Z": reject only the resonant middle ground,
// x1 != x2 but x1/x2 in q^Z.
void checkEqualOrDistinct(const QContext& ctx, cplx x1, cplx x2,
                          const char* label) {
    if (x1 == cplx(0.0) || x2 == cplx(0.0))
        fail(ErrorCode::AssumptionViolated,
             std::string(label) + " must be nonzero");
    SpiralHit hit = spiral_locate(ctx, x1, x2);
    if (hit.distance <= 1e-8 && hit.nearestIndex != 0)
        fail(ErrorCode::AssumptionViolated,
             std::string(label) +
                 " are congruent but not equal modulo q^Z (resonant input)");
}

const cplx kExpansionProbes[6] = {
    cplx(0.37, 0.21),  cplx(-0.83, 0.40), cplx(1.91, -0.63),
    cplx(-0.29, -1.7), cplx(2.45, 1.13),  cplx(0.52, -0.78),
};

} // namespace

SpiralSet JimboSakaiInstance::probeAvoidSet() const {
    SpiralSet s = connP.registry;
    s.merge(connQ.registry);
    // zeros of the theta factors in the comparison identity
    s.add(cplx(1.0));
    s.add(t);
    return s;
}

JimboSakaiInstance build_jimbo_sakai(const QContext& ctx, const CMatrix& calA0,
                                     const CMatrix& calA1, const CMatrix& calAt,
                                     cplx t, double tol) {
    if (!calA0.isSquare() || calA0.rows() != 2 || !calA0.sameShape(calA1) ||
        !calA0.sameShape(calAt))
        fail(ErrorCode::SchemaError, "residue matrices must all be 2x2");
    if (std::abs(t) < 1e-12 || std::abs(t - 1.0) < 1e-12)
        fail(ErrorCode::SchemaError, "the parameter t must avoid 0 and 1");

    JimboSakaiInstance inst;
    inst.ctx = ctx;
    inst.t = t;
    inst.calA0 = calA0;
    inst.calA1 = calA1;
    inst.calAt = calAt;
    inst.A2 = calA0 + calA1 + calAt;

    double a2scale = std::max(1.0, inst.A2.maxAbs());
    if (std::abs(inst.A2(0, 1)) > 1e-12 * a2scale ||
        std::abs(inst.A2(1, 0)) > 1e-12 * a2scale)
        fail(ErrorCode::AssumptionViolated,
             "the residue sum A2 = A_0 + A_1 + A_t must be diagonal");
    inst.kappa1 = inst.A2(0, 0);
    inst.kappa2 = inst.A2(1, 1);

    const cplx pm1 = ctx.p - 1.0;
    const CMatrix eye = CMatrix::identity(2);
    inst.B0 = eye + pm1 * calA0;
    inst.C = eye + pm1 * inst.A2;

    JordanData jb = eigen_jordan(inst.B0);
    if (!jb.unipotentTrivial)
        fail(ErrorCode::AssumptionViolated,
             "B0 = I + (p-1) A_0 must be diagonalizable");
    inst.thetaEig = jb.d;
    inst.cEig = {cplx(1.0) + pm1 * inst.kappa1, cplx(1.0) + pm1 * inst.kappa2};

    checkEqualOrDistinct(ctx, t * inst.thetaEig[0], t * inst.thetaEig[1],
                         "the eigenvalues t*theta_i of A(0,t)");
    checkEqualOrDistinct(ctx, inst.cEig[0], inst.cEig[1],
                         "the eigenvalues of I + (p-1) A_2");

    inst.A1 = -(cplx(1.0) + t) * eye +
              pm1 * (-(cplx(1.0) + t) * calA0 - t * calA1 - calAt);

    // polynomial matrix A(z,t) = t B0 + A1 z + C z^2
    CMatrix tB0 = t * inst.B0;
    RationalMatrix PA(2);
    CPolynomial den = CPolynomial::fromRoots({cplx(1.0), t});
    RationalMatrix N(2); // A(z,t) / ((z-1)(z-t)) = I + (p-1) z calA(z,t)
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CPolynomial e({tB0(i, j), inst.A1(i, j), inst.C(i, j)});
            PA(i, j) = CRationalFunction::fromPoly(e);
            N(i, j) = CRationalFunction(e, den);
        }
    }

    // cross-check the derived expansion against the residue form
    for (cplx zk : kExpansionProbes) {
        CMatrix lhs = N.eval(zk);
        CMatrix rhs = eye + pm1 * (calA0 + (zk / (zk - 1.0)) * calA1 +
                                   (zk / (zk - t)) * calAt);
        if (relDiff(lhs, rhs) > 1e-12)
            fail(ErrorCode::AssumptionViolated,
                 "the degree-2 expansion of the coefficient does not match "
                 "its residue form");
    }

    // determinant factorization: degree 4, lead c1*c2, nonvanishing roots
    CPolynomial detP = PA(0, 0).num() * PA(1, 1).num() -
                       PA(0, 1).num() * PA(1, 0).num();
    if (detP.degree() != 4)
        fail(ErrorCode::AssumptionViolated,
             "det A(z,t) must have exact degree 4");
    cplx lead = detP.leadCoeff();
    cplx expectLead = inst.cEig[0] * inst.cEig[1];
    if (std::abs(lead - expectLead) > 1e-10 * std::abs(expectLead))
        fail(ErrorCode::AssumptionViolated,
             "leading determinant coefficient must equal the product of the "
             "eigenvalues of I + (p-1) A_2");
    inst.detRoots = detP.roots();
    for (cplx r : inst.detRoots)
        if (std::abs(r) < 1e-10)
            fail(ErrorCode::AssumptionViolated,
                 "det A(z,t) must not vanish at the origin");
    std::sort(inst.detRoots.begin(), inst.detRoots.end(), [](cplx a, cplx b) {
        double ma = std::abs(a), mb = std::abs(b);
        if (std::abs(ma - mb) > 1e-12 * std::max(ma, mb)) return ma < mb;
        return std::arg(a) < std::arg(b);
    });
    for (cplx zk : kExpansionProbes) {
        cplx prod = lead;
        for (cplx r : inst.detRoots) prod *= (zk - r);
        cplx direct = detP.eval(zk);
        double sc = std::max({1.0, std::abs(prod), std::abs(direct)});
        // multiple roots are only located to ~sqrt(eps); the check targets
        // structural failures, which show up at O(1)
        if (std::abs(prod - direct) > 1e-6 * sc)
            fail(ErrorCode::AssumptionViolated,
                 "determinant factorization check failed at a probe point");
    }

    inst.sysP = std::make_unique<RationalQSystem>(
        RationalQSystem::fromSigmaP(ctx, CRationalFunction::constant(1.0), N));
    inst.sysQ = std::make_unique<RationalQSystem>(
        RationalQSystem::fromSigmaP(ctx, CRationalFunction::fromPoly(den), N));
    inst.connP = make_connection(*inst.sysP, tol);
    inst.connQ = make_connection(*inst.sysQ, tol);
    return inst;
}

// ---- scalar solutions --------------------------------------------------------

namespace {

void checkAlpha(const QContext& ctx, cplx alpha, double poleTol) {
    if (alpha == cplx(0.0))
        fail(ErrorCode::ZeroArgument, "alpha must be nonzero");
    if (spiral_locate(ctx, cplx(-1.0), alpha).distance <= poleTol)
        fail(ErrorCode::AlphaOnThetaSpiral,
             "alpha lies on -q^Z where the scalar solutions degenerate");
}

void checkOffSpiral(const QContext& ctx, cplx base, cplx z, double poleTol,
                    const char* what) {
    if (spiral_locate(ctx, base, z).distance <= poleTol)
        fail(ErrorCode::OnPoleSpiral, what);
}

} // namespace

ScaledComplex scalar_y0(const QContext& ctx, cplx alpha, cplx z, double tol,
                        double poleTol) {
    checkAlpha(ctx, alpha, poleTol);
    if (z == cplx(0.0)) fail(ErrorCode::ZeroArgument, "z must be nonzero");
    checkOffSpiral(ctx, 1.0 / alpha, z, poleTol,
                   "z lies on the pole spiral q^Z/alpha of y0");
    // zeros of (z/alpha; p)_inf sit on alpha*q^{<=0}
    SpiralSet lower;
    lower.add(Spiral{alpha, std::numeric_limits<long>::min(), 0});
    if (lower.contains(ctx, z, poleTol))
        fail(ErrorCode::OnPoleSpiral,
             "z lies on the pole spiral alpha*q^{<=0} of y0");
    ScaledComplex v = theta_scaled(ctx, z, tol);
    v *= qpochhammer_scaled(ctx, z / alpha, tol).inverse();
    v *= theta_scaled(ctx, -alpha * z, tol).inverse();
    return v;
}

ScaledComplex scalar_yinf(const QContext& ctx, cplx alpha, cplx z, double tol,
                          double poleTol) {
    checkAlpha(ctx, alpha, poleTol);
    if (z == cplx(0.0)) fail(ErrorCode::ZeroArgument, "z must be nonzero");
    checkOffSpiral(ctx, cplx(-1.0), z, poleTol,
                   "z lies on the pole spiral -q^Z of yinf");
    ScaledComplex v = qpochhammer_scaled(ctx, alpha / (ctx.q * z), tol);
    v *= theta_scaled(ctx, ctx.q * z, tol).inverse();
    return v;
}

ScaledComplex scalar_connection(const QContext& ctx, cplx alpha, cplx z,
                                double tol, double poleTol) {
    checkAlpha(ctx, alpha, poleTol);
    if (z == cplx(0.0)) fail(ErrorCode::ZeroArgument, "z must be nonzero");
    checkOffSpiral(ctx, alpha, z, poleTol,
                   "z lies on the pole spiral alpha*q^Z of the connection");
    checkOffSpiral(ctx, 1.0 / alpha, z, poleTol,
                   "z lies on the pole spiral q^Z/alpha of the connection");
    cplx cq = theta_constant(ctx, tol);
    ScaledComplex v = ScaledComplex::from(cq);
    v *= theta_scaled(ctx, z, tol);
    v *= theta_scaled(ctx, ctx.q * z, tol);
    v *= theta_scaled(ctx, -ctx.q * z / alpha, tol).inverse();
    v *= theta_scaled(ctx, -alpha * z, tol).inverse();
    return v;
}

// ---- comparison identity -----------------------------------------------

double comparison_residual(const JimboSakaiInstance& inst,
                         const std::vector<cplx>& zProbes,
                         ComparisonCorruption corruption, double poleTol) {
    const QContext& ctx = inst.ctx;
    CharacterPart chB0inv = make_character(inst.B0.inverse());
    CharacterPart chTB0inv = make_character((1.0 / inst.t) * inst.B0.inverse());
    const cplx cq = theta_constant(ctx);
    const CMatrix C2 = inst.C * inst.C;

    double worst = 0.0;
    for (cplx z : zProbes) {
        CMatrix qDirect = connection_eval(*inst.sysQ, inst.connQ, z, poleTol);
        CMatrix pVal = connection_eval(*inst.sysP, inst.connP, z, poleTol);

        ScaledComplex thq = theta_scaled(ctx, ctx.q * z);
        ScaledComplex thm = theta_scaled(ctx, -ctx.q * z);
        cplx denArg = (corruption == ComparisonCorruption::ThetaDenWrongArg)
                          ? -z / inst.t
                          : -ctx.q * z / inst.t;
        ScaledComplex thmt = theta_scaled(ctx, denArg);

        ScaledComplex s = ScaledComplex::from(cq * cq);
        s *= thq;
        if (corruption != ComparisonCorruption::ThetaNumOnce) s *= thq;
        s *= thm.inverse();
        s *= thmt.inverse();
        if (corruption == ComparisonCorruption::DropQPower) {
            // leave the prefactor out
        } else if (corruption == ComparisonCorruption::AltQPowerMinus3) {
            s *= ctx.qPow(-3);
        } else {
            s *= ctx.q;
        }

        CMatrix m = (corruption == ComparisonCorruption::DropA2Square)
                        ? pVal
                        : C2 * pVal;
        double logs = s.logs;
        if (corruption != ComparisonCorruption::DropLambdaB0Inverse) {
            ScaledCMatrix l1 = matrix_char_eval(ctx, chB0inv, z, 1e-14, poleTol);
            m = m * l1.m.inverse();
            logs -= l1.logScale;
        }
        if (corruption != ComparisonCorruption::DropLambdaTB0) {
            ScaledCMatrix l2 = matrix_char_eval(ctx, chTB0inv, z, 1e-14, poleTol);
            m = m * l2.m;
            logs += l2.logScale;
        }
        CMatrix rhs = ScaledCMatrix{s.m * m, logs}.value();
        worst = std::max(worst, relDiff(qDirect, rhs));
    }
    return worst;
}

double series_ratio_residual(const JimboSakaiInstance& inst,
                           const std::vector<cplx>& zProbes, double poleTol) {
    const QContext& ctx = inst.ctx;
    const cplx cq = theta_constant(ctx);
    double worst = 0.0;
    for (cplx z : zProbes) {
        CMatrix f0 = series_part_eval(*inst.sysQ, inst.connQ.y0, z, poleTol);
        CMatrix fInf = series_part_eval(*inst.sysQ, inst.connQ.yInf, z, poleTol);
        CMatrix h0 = series_part_eval(*inst.sysP, inst.connP.y0, z, poleTol);
        CMatrix hInf = series_part_eval(*inst.sysP, inst.connP.yInf, z, poleTol);
        CMatrix lhs = fInf.solve(f0);
        ScaledComplex s = ScaledComplex::from(cq * cq);
        s *= theta_scaled(ctx, -ctx.q * z).inverse();
        s *= theta_scaled(ctx, -ctx.q * z / inst.t).inverse();
        CMatrix rhs = ScaledCMatrix{s.m * hInf.solve(h0), s.logs}.value();
        worst = std::max(worst, relDiff(lhs, rhs));
    }
    return worst;
}

CriterionReport criterion_check(const QContext& ctx, const CMatrix& calA0,
                                const CMatrix& calA1, const CMatrix& calAt,
                                cplx t, const std::vector<cplx>& zProbes,
                                double tol) {
    JimboSakaiInstance instT = build_jimbo_sakai(ctx, calA0, calA1, calAt, t);
    JimboSakaiInstance instQT =
        build_jimbo_sakai(ctx, calA0, calA1, calAt, ctx.q * t);

    CriterionReport rep;
    rep.tol = tol;
    for (cplx z : zProbes) {
        CMatrix qT = connection_eval(*instT.sysQ, instT.connQ, z);
        CMatrix qQT = connection_eval(*instQT.sysQ, instQT.connQ, z);
        rep.qResidual = std::max(rep.qResidual, relDiff(qQT, qT));

        CMatrix pT = connection_eval(*instT.sysP, instT.connP, z);
        CMatrix pQT = connection_eval(*instQT.sysP, instQT.connP, z);
        CMatrix target = -(t * t) * (pT * instT.B0);
        rep.pResidual = std::max(rep.pResidual, relDiff(pQT, target));
    }
    rep.qPseudoConstant = rep.qResidual <= tol;
    rep.pCriterion = rep.pResidual <= tol;
    return rep;
}

} // namespace qb
